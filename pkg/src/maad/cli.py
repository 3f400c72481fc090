"""Command-line entry points for running sessions, the knowledge base, and the service."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from maad.artifacts import (
    ClassModel,
    DeploymentModel,
    SequenceModel,
    canonical_package_dict,
    package_digest,
    validate_package,
)
from maad.common import MaadError
from maad.diagrams import emit_diagram
from maad.evaluation import EvaluationRules
from maad.knowledge import KnowledgeBase, SourceKind
from maad.orchestrator import (
    Phase,
    SessionConfig,
    start_session,
    step,
    submit_clarification_answer,
)
from maad.orchestrator import replay as replay_journal
from maad.service import create_app, resolve_backend

ENV_DATA_DIR = "MAAD_DATA_DIR"

_ROLE_LETTERS = {"a": "analyst", "m": "modeler", "d": "designer", "e": "evaluator"}
_SOURCE_ALIASES = {"design": "design_case", "literature": "literature", "expert": "expert"}


def _data_dir(option_value: str | None) -> Path | None:
    raw = option_value or os.environ.get(ENV_DATA_DIR)
    return Path(raw) if raw else None


def _load_kb(data_dir: Path | None) -> KnowledgeBase | None:
    if data_dir is None:
        return None
    kb_dir = data_dir / "kb"
    if not (kb_dir / "meta.json").exists():
        return None
    return KnowledgeBase.load(kb_dir)


def _load_rules(data_dir: Path | None) -> EvaluationRules:
    if data_dir is not None:
        override = data_dir / "config" / "evaluation_rules.json"
        if override.exists():
            return EvaluationRules.load(override)
    return EvaluationRules.load_default()


@click.group()
def main() -> None:
    """Drive agent-built architecture design sessions from a requirements document."""


@main.command()
@click.option("--srs", "srs_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--backend", "backend_selector", default="remote", show_default=True,
              help="replay:<dir> or remote")
@click.option("--max-rounds", default=5, show_default=True, type=int)
@click.option("--severity-threshold", default=2, show_default=True, type=int)
@click.option("--top-k", default=5, show_default=True, type=int)
@click.option("--non-interactive", is_flag=True, default=False,
              help="Forbid clarification questions; risks are resolved by assumption.")
@click.option("--data-dir", default=None, type=click.Path(file_okay=False),
              help=f"Knowledge/config directory (defaults to ${ENV_DATA_DIR}).")
def run(srs_path, out_dir, backend_selector, max_rounds, severity_threshold, top_k, non_interactive, data_dir):
    """Run one design session to completion; exit 0 when confirmed, 3 when aborted."""
    srs_text = Path(srs_path).read_text(encoding="utf-8")
    data = _data_dir(data_dir)
    config = SessionConfig(
        max_rounds=max_rounds,
        severity_threshold=severity_threshold,
        interactive=not non_interactive,
        backend=backend_selector,
        top_k=top_k,
    )
    try:
        session = start_session(
            srs_text,
            config,
            backend=resolve_backend(backend_selector),
            kb=_load_kb(data),
            rules=_load_rules(data),
            session_dir=out_dir,
        )
        while not session.is_terminal:
            if session.phase is Phase.AWAIT_CLARIFICATION:
                for exchange in session.pending():
                    answer = click.prompt(f"[{exchange.question_id}] {exchange.question}")
                    submit_clarification_answer(session, exchange.question_id, answer)
                continue
            step(session)
    except MaadError as exc:
        raise click.ClickException(f"{exc.code}: {exc.message}")
    package = session.package
    out = Path(out_dir)
    violations = validate_package(package, srs_length=len(srs_text))
    if violations:
        out.joinpath("package.json").write_text(
            json.dumps(package.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        digest = "-"
    else:
        out.joinpath("package.json").write_text(
            json.dumps(canonical_package_dict(package), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        digest = package_digest(package)
        out.joinpath("digest.txt").write_text(digest + "\n", encoding="utf-8")
    click.echo(f"phase={session.phase.value} verdict={package.verdict.value} "
               f"rounds={package.round_count} digest={digest}")
    if package.verdict.value != "confirmed":
        sys.exit(3)


@main.command()
@click.option("--source", required=True, type=click.Choice(sorted(_SOURCE_ALIASES)))
@click.option("--roles", required=True, help="Comma-separated roles (a,m,d,e or full names).")
@click.option("--file", "file_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", default=None, type=click.Path(file_okay=False))
def ingest(source, roles, file_path, data_dir):
    """Add one document to the knowledge base."""
    data = _data_dir(data_dir)
    if data is None:
        raise click.ClickException(f"no data directory; pass --data-dir or set ${ENV_DATA_DIR}")
    kb_dir = data / "kb"
    kb = KnowledgeBase.load(kb_dir) if (kb_dir / "meta.json").exists() else KnowledgeBase()
    tags = [_ROLE_LETTERS.get(part.strip(), part.strip()) for part in roles.split(",") if part.strip()]
    try:
        chunk_ids = kb.ingest(
            Path(file_path).read_text(encoding="utf-8"), SourceKind(_SOURCE_ALIASES[source]), tags
        )
    except (MaadError, ValueError) as exc:
        raise click.ClickException(str(exc))
    kb.save(kb_dir)
    for chunk_id in chunk_ids:
        click.echo(chunk_id)


@main.command(name="kb-search")
@click.argument("query")
@click.option("--role", required=True)
@click.option("-k", "top_k", default=5, show_default=True, type=int)
@click.option("--data-dir", default=None, type=click.Path(file_okay=False))
def kb_search(query, role, top_k, data_dir):
    """Search the knowledge base as one of the agent roles."""
    data = _data_dir(data_dir)
    if data is None:
        raise click.ClickException(f"no data directory; pass --data-dir or set ${ENV_DATA_DIR}")
    try:
        kb = KnowledgeBase.load(data / "kb")
        results = kb.search(query, role, top_k)
    except (MaadError, ValueError) as exc:
        raise click.ClickException(str(exc))
    chunks = {c.chunk_id: c for c in kb.chunks}
    for result in results:
        preview = " ".join(chunks[result.chunk_id].text.split())[:100]
        click.echo(f"{result.chunk_id}\t{result.score:.6f}\t{preview}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", required=True, type=click.Choice(["class", "sequence", "deployment"]))
def render(model_path, kind):
    """Emit diagram text from a model JSON document."""
    data = json.loads(Path(model_path).read_text(encoding="utf-8"))
    model_type = {"class": ClassModel, "sequence": SequenceModel, "deployment": DeploymentModel}[kind]
    try:
        model = model_type.from_dict(data)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(emit_diagram(model).text)


@main.command(name="replay")
@click.option("--journal", "journal_path", required=True, type=click.Path(exists=True, dir_okay=False))
def replay_cmd(journal_path):
    """Reconstruct a session from its journal without calling any backend."""
    lines = Path(journal_path).read_text(encoding="utf-8").splitlines()
    try:
        session = replay_journal(lines)
    except MaadError as exc:
        raise click.ClickException(f"{exc.code}: {exc.message}")
    digest = "-" if validate_package(session.package) else package_digest(session.package)
    click.echo(f"phase={session.phase.value} verdict={session.package.verdict.value} "
               f"rounds={session.round_count} events={len(session.journal)} digest={digest}")


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--backend", "backend_selector", default="remote", show_default=True,
              help="Default backend for sessions that do not choose one.")
def serve(port, host, data_dir, backend_selector):
    """Serve the HTTP API."""
    import uvicorn

    app = create_app(Path(data_dir), default_backend=resolve_backend(backend_selector))
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
