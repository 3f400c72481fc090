"""Run the bundled online-bookstore session end to end.

Drives the full pipeline (analyst, modeler, designer, evaluator) with the
deterministic replay backend: round one finds an uncovered architecture-
significant requirement and routes a design refinement; round two confirms.
Every event lands in the journal, and replaying the journal reconstructs the
exact final package.
"""

from pathlib import Path

from maad.agents import ReplayBackend
from maad.artifacts import package_digest
from maad.knowledge import KnowledgeBase
from maad.orchestrator import SessionConfig, replay, run_to_completion, start_session

FIXTURE = Path(__file__).parent.parent / "tests" / "fixtures" / "bookstore"

srs = (FIXTURE / "srs.txt").read_text()
session = start_session(
    srs,
    SessionConfig(interactive=False),
    backend=ReplayBackend(FIXTURE / "replay"),
    kb=KnowledgeBase.load(FIXTURE / "data" / "kb"),
)
package = run_to_completion(session)

print("journal timeline:")
for event in session.journal:
    role = event.payload.get("role", "")
    stage = event.payload.get("stage", "")
    extra = f" {role}{stage}" if role or stage else ""
    print(f"  {event.seq:>2} {event.kind.value}{extra}")

print(f"\nverdict={package.verdict.value} rounds={package.round_count}")
print(f"requirements={len(package.requirement_set)} adrs={len(package.adrs)} "
      f"classes={len(package.class_model.classes)} links={len(package.traceability_links)}")

digest = package_digest(package)
rebuilt = replay(e.to_json_line() for e in session.journal)
assert package_digest(rebuilt.package) == digest
print(f"\nreplay(journal) reproduces the package digest: {digest[:24]}...")
