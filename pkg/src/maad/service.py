"""HTTP facade: sessions, event streaming, clarifications, verdicts, knowledge.

Sessions execute on a background worker thread each; POST /sessions returns
immediately and progress is observed through the event stream, which frames
every journal line as `data: <line>\\n\\n` from seq 1 and then live. Commands
against one session (answers, verdicts) are serialized by a per-session lock.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from pathlib import Path
from typing import Any, Iterator

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from maad import __version__
from maad.agents import CompletionBackend, RemoteBackend, ReplayBackend
from maad.artifacts import canonical_package_dict, package_digest, validate_package
from maad.common import (
    AlreadyAnswered,
    BackendUnavailable,
    EmptyDocument,
    EmptySrs,
    EmptyText,
    IndexUnavailable,
    InvalidConfig,
    InvalidPackage,
    InvalidState,
    MaadError,
    MissingInput,
    NoRoleTags,
    TerminalState,
    UnknownQuestion,
    UnknownSession,
)
from maad.diagrams import emit_diagram
from maad.evaluation import EvaluationRules
from maad.knowledge import KnowledgeBase
from maad.orchestrator import (
    Phase,
    Session,
    SessionConfig,
    run_to_completion,  # noqa: F401  (re-exported for embedding users)
    stakeholder_reject,
    start_session,
    step,
    submit_clarification_answer,
)

logger = logging.getLogger(__name__)

__all__ = ["create_app", "resolve_backend"]

_STATUS_BY_CODE = {
    UnknownSession.code: 404,
    UnknownQuestion.code: 404,
    InvalidState.code: 409,
    AlreadyAnswered.code: 409,
    TerminalState.code: 409,
    EmptySrs.code: 422,
    InvalidConfig.code: 422,
    EmptyDocument.code: 422,
    NoRoleTags.code: 422,
    EmptyText.code: 422,
    InvalidPackage.code: 422,
    MissingInput.code: 422,
    BackendUnavailable.code: 503,
    IndexUnavailable.code: 503,
}

ARTIFACT_KINDS = {"requirements", "adrs", "views", "diagrams", "mismatches", "package"}


def resolve_backend(selector: str | None, default: CompletionBackend | None = None) -> CompletionBackend:
    """Turn a config backend selector into a backend instance."""
    if selector is None:
        return default if default is not None else RemoteBackend()
    if selector == "remote":
        return RemoteBackend()
    if selector.startswith("replay:"):
        return ReplayBackend(selector.split(":", 1)[1])
    raise InvalidConfig(f"unknown backend selector {selector!r}")


class _SessionRunner:
    """One session plus its worker thread, command lock, and event buffer."""

    def __init__(self, session: Session) -> None:
        self.session = session
        self.lock = threading.RLock()
        self.wake = threading.Condition(self.lock)
        self.lines: list[str] = [event.to_json_line() for event in session.journal]
        self.stakeholder_verdict: dict[str, str] | None = None
        self.error: str | None = None
        self._thread: threading.Thread | None = None
        session.on_event.append(lambda event, line: self._on_event(line))

    def _on_event(self, line: str) -> None:
        # callers mutate the session under self.lock, so the condition is held
        self.lines.append(line)
        self.wake.notify_all()

    def start_worker(self) -> None:
        self._thread = threading.Thread(target=self._run_loop, name=f"session-{self.session.session_id[:8]}", daemon=True)
        self._thread.start()

    def _run_loop(self) -> None:
        # One worker owns every step of its session for the session's whole
        # life; a stakeholder reject flips the phase under the lock and this
        # same loop picks the refinement up, so steps can never race.
        while True:
            with self.lock:
                if self.session.phase is Phase.ABORTED:
                    self.wake.notify_all()
                    return
                if self.session.phase is Phase.CONFIRMED:
                    if self._verdict_possible():
                        self.wake.wait(timeout=0.5)
                        continue
                    self.wake.notify_all()
                    return
                if self.session.phase is Phase.AWAIT_CLARIFICATION:
                    self.wake.wait(timeout=0.5)
                    continue
                try:
                    step(self.session)
                except MaadError as exc:
                    logger.error("session %s worker stopped: %s", self.session.session_id, exc.message)
                    self.error = exc.message
                    self.wake.notify_all()
                    return

    def _verdict_possible(self) -> bool:
        if self.stakeholder_verdict is not None:
            return False  # approve recorded, or the one reject already consumed
        session = self.session
        return not session.stakeholder_reject_used and session.round_count < session.config.max_rounds

    def snapshot(self) -> dict[str, Any]:
        with self.lock:
            session = self.session
            package = session.package
            inventory = ["package"]
            if package.requirement_set:
                inventory.insert(0, "requirements")
            if package.adrs or package.qa_priorities:
                inventory.insert(-1, "adrs")
            if package.logical_view.components or package.physical_view.nodes:
                inventory.insert(-1, "views")
            if package.class_model.classes or package.sequence_models:
                inventory.insert(-1, "diagrams")
            if session.open_mismatches:
                inventory.insert(-1, "mismatches")
            return {
                "session_id": session.session_id,
                "phase": session.phase.value,
                "round_count": session.round_count,
                "verdict": package.verdict.value,
                "pending_clarifications": [
                    {"question_id": c.question_id, "risk_id": c.risk_id, "question": c.question}
                    for c in session.pending()
                ],
                "open_mismatches": [m.to_dict() for m in session.open_mismatches],
                "artifact_inventory": inventory,
                "stakeholder_verdict": self.stakeholder_verdict,
                "error": self.error,
            }

    def artifact(self, kind: str) -> dict[str, Any]:
        with self.lock:
            session = self.session
            package = session.package
            if kind == "requirements":
                return {
                    "requirement_set": [r.to_dict() for r in package.requirement_set],
                    "asr_tags": [t.to_dict() for t in package.asr_tags],
                    "risk_flags": [r.to_dict() for r in package.risk_flags],
                    "clarifications": [c.to_dict() for c in package.clarifications],
                    "grounding": list(session.grounding.get("analyst", ())),
                }
            if kind == "adrs":
                return {
                    "adrs": [a.to_dict() for a in package.adrs],
                    "qa_priorities": [q.to_dict() for q in package.qa_priorities],
                    "grounding": list(session.grounding.get("modeler", ())),
                }
            if kind == "views":
                return {
                    "logical_view": package.logical_view.to_dict(),
                    "physical_view": package.physical_view.to_dict(),
                }
            if kind == "diagrams":
                return {
                    "class_model": package.class_model.to_dict(),
                    "sequence_models": [s.to_dict() for s in package.sequence_models],
                    "deployment_model": package.deployment_model.to_dict(),
                    "texts": {
                        "class": emit_diagram(package.class_model).text,
                        "sequence": [emit_diagram(s).text for s in package.sequence_models],
                        "deployment": emit_diagram(package.deployment_model).text,
                    },
                    "grounding": list(session.grounding.get("designer", ())),
                }
            if kind == "mismatches":
                return {
                    "open_mismatches": [m.to_dict() for m in session.open_mismatches],
                    "root_causes": [c.to_dict() for c in session.root_causes],
                    "suggestions": [s.to_dict() for s in session.suggestions],
                }
            if validate_package(package):
                return {"package": package.to_dict(), "digest": None}
            return {"package": canonical_package_dict(package), "digest": package_digest(package)}

    def stream(self) -> Iterator[str]:
        index = 0
        while True:
            with self.lock:
                while index >= len(self.lines):
                    if self.session.is_terminal or self.error:
                        return
                    self.wake.wait(timeout=0.25)
                line = self.lines[index]
            index += 1
            yield f"data: {line}\n\n"


class CreateSessionRequest(BaseModel):
    srs_text: str
    config: dict[str, Any] | None = None


class AnswerRequest(BaseModel):
    text: str


class VerdictRequest(BaseModel):
    decision: str
    comment: str = ""


class IngestRequest(BaseModel):
    text: str
    source_kind: str
    role_tags: list[str]


def create_app(
    data_dir: str | Path,
    *,
    default_backend: CompletionBackend | None = None,
    rules: EvaluationRules | None = None,
) -> FastAPI:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    kb_dir = data_dir / "kb"
    kb = KnowledgeBase.load(kb_dir) if (kb_dir / "meta.json").exists() else KnowledgeBase()
    rules_path = data_dir / "config" / "evaluation_rules.json"
    rules = rules or (EvaluationRules.load(rules_path) if rules_path.exists() else EvaluationRules.load_default())

    app = FastAPI(title="maad", version=__version__)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    runners: dict[str, _SessionRunner] = {}
    manager_lock = threading.Lock()
    app.state.kb = kb
    app.state.runners = runners

    @app.exception_handler(MaadError)
    async def maad_error_handler(request: Request, exc: MaadError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        body: dict[str, Any] = {"error_code": exc.code, "message": exc.message}
        if exc.details:
            body["details"] = exc.details
        return JSONResponse(status_code=status, content=body)

    def get_runner(session_id: str) -> _SessionRunner:
        runner = runners.get(session_id)
        if runner is None:
            raise UnknownSession(f"no session {session_id!r}")
        return runner

    @app.get("/")
    def index() -> dict[str, str]:
        return {"service": "maad", "version": __version__}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest) -> dict[str, str]:
        config = SessionConfig.from_dict(body.config or {})
        backend = resolve_backend(config.backend, default_backend)
        session_id = uuid.uuid4().hex
        session = start_session(
            body.srs_text,
            config,
            backend=backend,
            kb=kb if kb.count else None,
            rules=rules,
            session_dir=data_dir / "sessions" / session_id,
            session_id=session_id,
        )
        runner = _SessionRunner(session)
        with manager_lock:
            runners[session_id] = runner
        runner.start_worker()
        return {"session_id": session_id, "phase": Phase.ANALYSIS.value}

    @app.get("/sessions/{session_id}")
    def session_snapshot(session_id: str) -> dict[str, Any]:
        return get_runner(session_id).snapshot()

    @app.get("/sessions/{session_id}/events")
    def session_events(session_id: str) -> StreamingResponse:
        runner = get_runner(session_id)
        return StreamingResponse(runner.stream(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/artifacts/{kind}")
    def session_artifact(session_id: str, kind: str):
        runner = get_runner(session_id)
        if kind not in ARTIFACT_KINDS:
            return JSONResponse(
                status_code=422,
                content={"error_code": "UnknownArtifactKind", "message": f"kind must be one of {sorted(ARTIFACT_KINDS)}"},
            )
        return runner.artifact(kind)

    @app.post("/sessions/{session_id}/clarifications/{question_id}/answer")
    def answer_clarification(session_id: str, question_id: str, body: AnswerRequest) -> dict[str, Any]:
        runner = get_runner(session_id)
        with runner.lock:
            submit_clarification_answer(runner.session, question_id, body.text)
            runner.wake.notify_all()
        return runner.snapshot()

    @app.post("/sessions/{session_id}/verdict")
    def record_verdict(session_id: str, body: VerdictRequest) -> dict[str, Any]:
        runner = get_runner(session_id)
        if body.decision not in {"approve", "reject"}:
            return JSONResponse(
                status_code=422,
                content={"error_code": "InvalidVerdict", "message": "decision must be approve or reject"},
            )
        with runner.lock:
            if runner.session.phase is not Phase.CONFIRMED:
                raise InvalidState(f"no verdict to record in phase {runner.session.phase.value}")
            if runner.stakeholder_verdict is not None and body.decision == "reject":
                raise InvalidState("a stakeholder verdict was already recorded")
            if body.decision == "reject":
                stakeholder_reject(runner.session, body.comment)
            runner.stakeholder_verdict = {"decision": body.decision, "comment": body.comment}
            if runner.session.session_dir is not None:
                (runner.session.session_dir / "stakeholder.json").write_text(
                    json.dumps(runner.stakeholder_verdict, indent=2) + "\n", encoding="utf-8"
                )
            runner.wake.notify_all()  # the standing worker picks up a reopened session
        return runner.snapshot()

    @app.post("/knowledge/documents", status_code=201)
    def ingest_document(body: IngestRequest) -> dict[str, Any]:
        chunk_ids = kb.ingest(body.text, body.source_kind, body.role_tags)
        kb.save(kb_dir)
        return {"chunk_ids": chunk_ids}

    @app.get("/knowledge/search")
    def search_knowledge(q: str = "", role: str = "", k: int = 5) -> dict[str, Any]:
        if k < 1:
            return JSONResponse(
                status_code=422, content={"error_code": "InvalidK", "message": "k must be >= 1"}
            )
        try:
            results = kb.search(q, role, k)
        except ValueError as exc:
            return JSONResponse(status_code=422, content={"error_code": "InvalidRole", "message": str(exc)})
        chunks = {c.chunk_id: c for c in kb.chunks}
        return {
            "results": [
                {"chunk_id": r.chunk_id, "score": r.score, **chunks[r.chunk_id].to_dict()}
                for r in results
            ]
        }

    return app
