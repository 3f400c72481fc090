"""Ingest architectural knowledge and retrieve it per agent role.

Three documents, one per source kind, land in an in-memory knowledge base.
Each agent role sees only the chunks tagged for it; scores are cosine
similarities from the deterministic hash embedder.
"""

from maad.knowledge import KnowledgeBase

kb = KnowledgeBase()

kb.ingest(
    "A recovered commerce platform keeps payments behind an adapter so provider "
    "swaps never touch checkout code.",
    "design_case",
    ["modeler", "designer"],
)
kb.ingest(
    "Availability targets above 99.9 percent force replication and health-checked "
    "failover; rank quality attributes before choosing structure.",
    "literature",
    ["analyst", "modeler"],
)
kb.ingest(
    "Walk every requirement to the element that serves it; reviews that skip "
    "tracing ship designs with orphaned requirements.",
    "expert",
    ["evaluator"],
)

print(f"{kb.count} chunks ingested\n")

for role in ["analyst", "modeler", "designer", "evaluator"]:
    hits = kb.search("replication and failover for availability", role, k=3)
    shown = ", ".join(f"{h.chunk_id} ({h.score:.3f})" for h in hits) or "nothing tagged for this role"
    print(f"{role:>9}: {shown}")

# persistence round-trips through the documented kb/ layout
import tempfile

with tempfile.TemporaryDirectory() as tmp:
    kb.save(tmp + "/kb")
    reloaded = KnowledgeBase.load(tmp + "/kb")
    assert reloaded.search("failover", "modeler", 2) == kb.search("failover", "modeler", 2)
    print("\nsave -> load -> search matches the in-memory index")
