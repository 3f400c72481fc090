"""Session state machine: the design pipeline, refinement loop, and journal.

One session is one logical execution stream. Every state transition is driven
by applying a journal event through a single reducer, during live execution
and during replay alike, so a replayed journal reconstructs the live state by
construction. The journal is append-only with gap-free sequence numbers.
"""

from __future__ import annotations

import json
import logging
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from maad.agents import (
    AgentOutputInvalid,
    AgentTaskResult,
    AnalystBundle,
    CompletionBackend,
    DesignerBundle,
    EvaluatorBundle,
    JudgedMismatch,
    ModelerBundle,
    SessionSnapshot,
    ValidationContext,
    run_agent_task,
)
from maad.artifacts import (
    ArchitecturalDecisionRecord,
    AsrTag,
    ClarificationExchange,
    ClarificationStatus,
    ClassModel,
    DeploymentModel,
    DesignPackage,
    LogicalView,
    MismatchKind,
    MismatchReport,
    PackageVerdict,
    PhysicalView,
    QualityAttributePriority,
    RefinementSuggestion,
    Requirement,
    RiskFlag,
    RiskResolution,
    RootCause,
    SequenceModel,
    TraceabilityLink,
    package_digest,
    pending_clarifications,
)
from maad.common import (
    AlreadyAnswered,
    CorruptJournal,
    EmptyJournal,
    EmptySrs,
    EmptyText,
    InvalidConfig,
    InvalidState,
    MaadError,
    RoleName,
    Stage,
    TerminalState,
    UnknownQuestion,
    utc_now_iso,
)
from maad.evaluation import EvaluationRules, VerdictDecision, evaluate_package
from maad.knowledge import KnowledgeBase

logger = logging.getLogger(__name__)

__all__ = [
    "EventKind",
    "JournalEvent",
    "Phase",
    "Session",
    "SessionConfig",
    "replay",
    "run_to_completion",
    "stakeholder_reject",
    "start_session",
    "step",
    "submit_clarification_answer",
]


class Phase(str, Enum):
    INIT = "INIT"
    ANALYSIS = "ANALYSIS"
    AWAIT_CLARIFICATION = "AWAIT_CLARIFICATION"
    MODELING = "MODELING"
    DESIGN = "DESIGN"
    EVALUATION = "EVALUATION"
    REFINE_ANALYSIS = "REFINE_ANALYSIS"
    REFINE_MODELING = "REFINE_MODELING"
    REFINE_DESIGN = "REFINE_DESIGN"
    CONFIRMED = "CONFIRMED"
    ABORTED = "ABORTED"


TERMINAL_PHASES = {Phase.CONFIRMED, Phase.ABORTED}

_REFINE_PHASE_BY_STAGE = {
    Stage.ANALYSIS: Phase.REFINE_ANALYSIS,
    Stage.MODELING: Phase.REFINE_MODELING,
    Stage.DESIGN: Phase.REFINE_DESIGN,
}

_ROLE_BY_PHASE = {
    Phase.ANALYSIS: (RoleName.ANALYST, "analyze"),
    Phase.REFINE_ANALYSIS: (RoleName.ANALYST, "analyze"),
    Phase.MODELING: (RoleName.MODELER, "model"),
    Phase.REFINE_MODELING: (RoleName.MODELER, "model"),
    Phase.DESIGN: (RoleName.DESIGNER, "design"),
    Phase.REFINE_DESIGN: (RoleName.DESIGNER, "design"),
    Phase.EVALUATION: (RoleName.EVALUATOR, "evaluate"),
}


class EventKind(str, Enum):
    SESSION_STARTED = "SessionStarted"
    AGENT_TASK_STARTED = "AgentTaskStarted"
    AGENT_TASK_COMPLETED = "AgentTaskCompleted"
    CLARIFICATION_ASKED = "ClarificationAsked"
    CLARIFICATION_ANSWERED = "ClarificationAnswered"
    EVALUATION_COMPLETED = "EvaluationCompleted"
    REFINEMENT_ROUTED = "RefinementRouted"
    SESSION_CONFIRMED = "SessionConfirmed"
    SESSION_ABORTED = "SessionAborted"


@dataclass(frozen=True)
class JournalEvent:
    seq: int
    timestamp: str
    kind: EventKind
    payload: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "timestamp": self.timestamp, "kind": self.kind.value, "payload": self.payload}

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> JournalEvent:
        return cls(int(data["seq"]), str(data["timestamp"]), EventKind(data["kind"]), dict(data["payload"]))


@dataclass
class SessionConfig:
    max_rounds: int = 5
    severity_threshold: int = 2
    interactive: bool = False
    backend: str | None = None
    top_k: int = 5

    def validate(self) -> None:
        if self.max_rounds < 1:
            raise InvalidConfig(f"max_rounds must be >= 1, got {self.max_rounds}")
        if not 1 <= self.severity_threshold <= 4:
            raise InvalidConfig(f"severity_threshold must be in [1, 4], got {self.severity_threshold}")
        if self.top_k < 1:
            raise InvalidConfig(f"top_k must be >= 1, got {self.top_k}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_rounds": self.max_rounds,
            "severity_threshold": self.severity_threshold,
            "interactive": self.interactive,
            "backend": self.backend,
            "top_k": self.top_k,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SessionConfig:
        unknown = sorted(set(data) - {"max_rounds", "severity_threshold", "interactive", "backend", "top_k"})
        if unknown:
            raise InvalidConfig(f"unknown config fields: {unknown}")
        try:
            config = cls(
                max_rounds=int(data.get("max_rounds", 5)),
                severity_threshold=int(data.get("severity_threshold", 2)),
                interactive=bool(data.get("interactive", False)),
                backend=data.get("backend"),
                top_k=int(data.get("top_k", 5)),
            )
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"malformed config: {exc}") from exc
        config.validate()
        return config

    @property
    def task_budget(self) -> int:
        # The documented work bound, enforced as a hard dispatch guard.
        return 4 + 3 * self.max_rounds


class Session:
    """Mutable session state; field changes happen only inside the event reducer."""

    def __init__(
        self,
        *,
        backend: CompletionBackend | None = None,
        kb: KnowledgeBase | None = None,
        rules: EvaluationRules | None = None,
        session_dir: str | Path | None = None,
        clock: Callable[[], str] = utc_now_iso,
    ) -> None:
        self.backend = backend
        self.kb = kb
        self.rules = rules or EvaluationRules.load_default()
        self.session_dir = Path(session_dir) if session_dir else None
        self.clock = clock
        self.on_event: list[Callable[[JournalEvent, str], None]] = []

        self.session_id = ""
        self.srs_text = ""
        self.config = SessionConfig()
        self.phase = Phase.INIT
        self.round_count = 0
        self.package = DesignPackage()
        self.open_mismatches: tuple[MismatchReport, ...] = ()
        self.root_causes: tuple[RootCause, ...] = ()
        self.suggestions: tuple[RefinementSuggestion, ...] = ()
        self.journal: list[JournalEvent] = []
        self.pending_directives: tuple[str, ...] = ()
        self.tasks_dispatched = 0
        self.grounding: dict[str, tuple[str, ...]] = {}
        self.abort_cause: str | None = None
        self.stakeholder_reject_used = False
        self._modeler_links: tuple[TraceabilityLink, ...] = ()
        self._designer_links: tuple[TraceabilityLink, ...] = ()
        self._last_judged: tuple[JudgedMismatch, ...] = ()

    # -- journal plumbing ---------------------------------------------------

    def _append(self, kind: EventKind, payload: dict[str, Any]) -> JournalEvent:
        event = JournalEvent(seq=len(self.journal) + 1, timestamp=self.clock(), kind=kind, payload=payload)
        line = event.to_json_line()
        if self.session_dir is not None:
            self.session_dir.mkdir(parents=True, exist_ok=True)
            with open(self.session_dir / "journal.jsonl", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        self.journal.append(event)
        _apply_event(self, event)
        for callback in self.on_event:
            callback(event, line)
        return event

    def _snapshot_artifacts(self, label: str) -> None:
        if self.session_dir is None:
            return
        directory = self.session_dir / "artifacts"
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{label}_{self.round_count}.json"
        path.write_text(
            json.dumps(self.package.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    # -- public state views ---------------------------------------------------

    @property
    def is_terminal(self) -> bool:
        return self.phase in TERMINAL_PHASES

    def pending(self) -> tuple[ClarificationExchange, ...]:
        return pending_clarifications(self.package)


# ---------------------------------------------------------------------------
# Event reducer (shared by live execution and replay)
# ---------------------------------------------------------------------------


def _apply_event(state: Session, event: JournalEvent) -> None:
    payload = event.payload
    kind = event.kind
    if kind is EventKind.SESSION_STARTED:
        state.session_id = payload["session_id"]
        state.srs_text = payload["srs_text"]
        state.config = SessionConfig.from_dict(payload["config"])
        state.phase = Phase.ANALYSIS
        state.round_count = 0
        state.package = DesignPackage()
    elif kind is EventKind.AGENT_TASK_STARTED:
        state.tasks_dispatched += 1
    elif kind is EventKind.AGENT_TASK_COMPLETED:
        _apply_task_completed(state, payload)
    elif kind is EventKind.CLARIFICATION_ASKED:
        pass  # exchanges already landed with the analyst artifacts
    elif kind is EventKind.CLARIFICATION_ANSWERED:
        _apply_answer(state, payload["question_id"], payload["answer"])
    elif kind is EventKind.EVALUATION_COMPLETED:
        _apply_evaluation(state, payload)
    elif kind is EventKind.REFINEMENT_ROUTED:
        state.pending_directives = tuple(payload.get("directives", ()))
        if payload.get("source") == "stakeholder":
            state.stakeholder_reject_used = True
            state.phase = _REFINE_PHASE_BY_STAGE[Stage(payload["stage"])]
            state.package = replace(state.package, verdict=PackageVerdict.UNCONFIRMED)
            state.open_mismatches = tuple(MismatchReport.from_dict(m) for m in payload.get("mismatches", ()))
    elif kind is EventKind.SESSION_CONFIRMED:
        state.phase = Phase.CONFIRMED
    elif kind is EventKind.SESSION_ABORTED:
        state.phase = Phase.ABORTED
        state.abort_cause = payload.get("cause")
        state.package = replace(state.package, verdict=PackageVerdict.ABORTED)


def _apply_task_completed(state: Session, payload: dict[str, Any]) -> None:
    role = RoleName(payload["role"])
    artifacts = payload["artifacts"]
    state.grounding[role.value] = tuple(payload.get("grounding", ()))
    state.pending_directives = ()
    if role is RoleName.ANALYST:
        # Upstream invalidation: a fresh analysis supersedes every downstream artifact.
        state.package = replace(
            state.package,
            requirement_set=tuple(Requirement.from_dict(r) for r in artifacts["requirements"]),
            asr_tags=tuple(AsrTag.from_dict(t) for t in artifacts["asr_tags"]),
            risk_flags=tuple(RiskFlag.from_dict(r) for r in artifacts["risk_flags"]),
            clarifications=tuple(ClarificationExchange.from_dict(c) for c in artifacts["clarifications"]),
            qa_priorities=(),
            adrs=(),
            logical_view=LogicalView(),
            physical_view=PhysicalView(),
            class_model=ClassModel(),
            sequence_models=(),
            deployment_model=DeploymentModel(),
            traceability_links=(),
            verdict=PackageVerdict.UNCONFIRMED,
        )
        state._modeler_links = ()
        state._designer_links = ()
        has_pending = bool(pending_clarifications(state.package))
        state.phase = Phase.AWAIT_CLARIFICATION if (state.config.interactive and has_pending) else Phase.MODELING
    elif role is RoleName.MODELER:
        state._modeler_links = tuple(TraceabilityLink.from_dict(t) for t in artifacts["traceability_links"])
        state._designer_links = ()
        state.package = replace(
            state.package,
            qa_priorities=tuple(QualityAttributePriority.from_dict(q) for q in artifacts["qa_priorities"]),
            adrs=tuple(ArchitecturalDecisionRecord.from_dict(a) for a in artifacts["adrs"]),
            logical_view=LogicalView.from_dict(artifacts["logical_view"]),
            physical_view=PhysicalView.from_dict(artifacts["physical_view"]),
            class_model=ClassModel(),
            sequence_models=(),
            deployment_model=DeploymentModel(),
            traceability_links=state._modeler_links,
            verdict=PackageVerdict.UNCONFIRMED,
        )
        state.phase = Phase.DESIGN
    elif role is RoleName.DESIGNER:
        state._designer_links = tuple(TraceabilityLink.from_dict(t) for t in artifacts["traceability_links"])
        state.package = replace(
            state.package,
            class_model=ClassModel.from_dict(artifacts["class_model"]),
            sequence_models=tuple(SequenceModel.from_dict(s) for s in artifacts["sequence_models"]),
            deployment_model=DeploymentModel.from_dict(artifacts["deployment_model"]),
            traceability_links=state._modeler_links + state._designer_links,
            verdict=PackageVerdict.UNCONFIRMED,
        )
        state.phase = Phase.EVALUATION
    else:
        state._last_judged = tuple(
            JudgedMismatch(
                description=j["description"],
                severity=int(j["severity"]),
                stage=Stage(j["stage"]) if j.get("stage") else None,
                requirement_refs=tuple(j.get("requirement_refs", ())),
                artifact_refs=tuple(j.get("artifact_refs", ())),
            )
            for j in artifacts["judged_mismatches"]
        )


def _apply_answer(state: Session, question_id: str, answer: str) -> None:
    exchanges = tuple(
        replace(c, answer=answer, status=ClarificationStatus.ANSWERED) if c.question_id == question_id else c
        for c in state.package.clarifications
    )
    # A risk whose every question is answered counts as clarified.
    new_risks = []
    for risk in state.package.risk_flags:
        related = [c for c in exchanges if c.risk_id == risk.id]
        answered = related and all(c.status is ClarificationStatus.ANSWERED for c in related)
        if answered and risk.resolution is RiskResolution.OPEN:
            new_risks.append(replace(risk, resolution=RiskResolution.CLARIFIED))
        else:
            new_risks.append(risk)
    state.package = replace(state.package, clarifications=exchanges, risk_flags=tuple(new_risks))
    if not pending_clarifications(state.package):
        state.phase = Phase.ANALYSIS


def _apply_evaluation(state: Session, payload: dict[str, Any]) -> None:
    mismatches = tuple(MismatchReport.from_dict(m) for m in payload["mismatches"])
    open_ids = set(payload["open_mismatch_ids"])
    state.open_mismatches = tuple(m for m in mismatches if m.id in open_ids)
    state.root_causes = tuple(RootCause.from_dict(c) for c in payload["root_causes"])
    state.suggestions = tuple(RefinementSuggestion.from_dict(s) for s in payload["suggestions"])
    state.round_count = int(payload["round"])
    decision = payload["decision"]
    if decision == "confirmed":
        state.package = replace(state.package, verdict=PackageVerdict.CONFIRMED, round_count=state.round_count)
        state.phase = Phase.CONFIRMED
    elif decision == "abort":
        state.package = replace(state.package, verdict=PackageVerdict.ABORTED, round_count=state.round_count)
        state.phase = Phase.ABORTED
    else:
        state.package = replace(state.package, round_count=state.round_count)
        state.phase = _REFINE_PHASE_BY_STAGE[Stage(payload["routed_stage"])]


# ---------------------------------------------------------------------------
# Live execution
# ---------------------------------------------------------------------------


def start_session(
    srs_text: str,
    config: SessionConfig | None = None,
    *,
    backend: CompletionBackend | None = None,
    kb: KnowledgeBase | None = None,
    rules: EvaluationRules | None = None,
    session_dir: str | Path | None = None,
    session_id: str | None = None,
    clock: Callable[[], str] = utc_now_iso,
) -> Session:
    """Open a session: phase ANALYSIS, round 0, journal [SessionStarted]."""
    if not srs_text or not srs_text.strip():
        raise EmptySrs("the requirements document is empty")
    config = config or SessionConfig()
    config.validate()
    session = Session(backend=backend, kb=kb, rules=rules, session_dir=session_dir, clock=clock)
    session._append(
        EventKind.SESSION_STARTED,
        {
            "session_id": session_id or uuid.uuid4().hex,
            "srs_text": srs_text,
            "config": config.to_dict(),
        },
    )
    return session


def step(session: Session) -> JournalEvent | None:
    """Execute exactly one transition; None while awaiting clarification answers."""
    if session.is_terminal:
        raise TerminalState(f"session is {session.phase.value}")
    if session.phase is Phase.AWAIT_CLARIFICATION:
        return None
    if session.phase is Phase.EVALUATION:
        return _step_evaluation(session)
    role, task_kind = _ROLE_BY_PHASE[session.phase]
    return _step_producer(session, role, task_kind)


def _dispatch_guard(session: Session) -> JournalEvent | None:
    if session.tasks_dispatched >= session.config.task_budget:
        return session._append(
            EventKind.SESSION_ABORTED,
            {"cause": f"agent task budget exhausted ({session.config.task_budget})", "round_count": session.round_count},
        )
    return None


def _retrieve(session: Session, role: RoleName):
    if session.kb is None or session.kb.count == 0:
        return []
    return session.kb.search_chunks(session.srs_text, role, session.config.top_k)


def _run_role_task(session: Session, role: RoleName, task_kind: str) -> AgentTaskResult | JournalEvent:
    """Common dispatch path; returns the abort event on failure."""
    if session.backend is None:
        raise InvalidState("session has no completion backend attached")
    aborted = _dispatch_guard(session)
    if aborted is not None:
        return aborted
    chunks = _retrieve(session, role)
    snapshot = _snapshot_for(session, role)
    context = ValidationContext(
        interactive=session.config.interactive,
        base_package=session.package,
        allowed_chunks=frozenset(c.chunk_id for c in chunks),
        srs_length=len(session.srs_text),
    )
    session._append(
        EventKind.AGENT_TASK_STARTED,
        {"role": role.value, "task": task_kind, "round": session.round_count},
    )
    try:
        return run_agent_task(
            role,
            task_kind,
            snapshot,
            session.backend,
            round_number=session.round_count,
            retrieved_chunks=chunks,
            context=context,
        )
    except AgentOutputInvalid as exc:
        logger.warning("session %s aborted: %s", session.session_id, exc.message)
        return session._append(
            EventKind.SESSION_ABORTED,
            {"cause": exc.message, "round_count": session.round_count},
        )


def _snapshot_for(session: Session, role: RoleName) -> SessionSnapshot:
    package = session.package
    answered = tuple(
        (c.question_id, c.question, c.answer or "")
        for c in package.clarifications
        if c.status is ClarificationStatus.ANSWERED
    )
    prior: dict[str, Any] | None = None
    if role is RoleName.MODELER:
        prior = {
            "requirements": [r.to_dict() for r in package.requirement_set],
            "asr_tags": [t.to_dict() for t in package.asr_tags],
            "risk_flags": [r.to_dict() for r in package.risk_flags],
        }
    elif role is RoleName.DESIGNER:
        prior = {
            "requirements": [r.to_dict() for r in package.requirement_set],
            "asr_tags": [t.to_dict() for t in package.asr_tags],
            "qa_priorities": [q.to_dict() for q in package.qa_priorities],
            "adrs": [a.to_dict() for a in package.adrs],
            "logical_view": package.logical_view.to_dict(),
            "physical_view": package.physical_view.to_dict(),
        }
    elif role is RoleName.EVALUATOR:
        prior = {"package": package.to_dict()}
    return SessionSnapshot(
        srs_text=session.srs_text,
        prior_artifacts=prior,
        clarification_answers=answered,
        refinement_directives=session.pending_directives,
        interactive=session.config.interactive,
    )


def _bundle_payload(bundle: AnalystBundle | ModelerBundle | DesignerBundle | EvaluatorBundle) -> dict[str, Any]:
    if isinstance(bundle, AnalystBundle):
        return {
            "requirements": [r.to_dict() for r in bundle.requirements],
            "asr_tags": [t.to_dict() for t in bundle.asr_tags],
            "risk_flags": [r.to_dict() for r in bundle.risk_flags],
            "clarifications": [c.to_dict() for c in bundle.clarifications],
        }
    if isinstance(bundle, ModelerBundle):
        return {
            "qa_priorities": [q.to_dict() for q in bundle.qa_priorities],
            "adrs": [a.to_dict() for a in bundle.adrs],
            "logical_view": bundle.logical_view.to_dict(),
            "physical_view": bundle.physical_view.to_dict(),
            "traceability_links": [t.to_dict() for t in bundle.traceability_links],
        }
    if isinstance(bundle, DesignerBundle):
        return {
            "class_model": bundle.class_model.to_dict(),
            "sequence_models": [s.to_dict() for s in bundle.sequence_models],
            "deployment_model": bundle.deployment_model.to_dict(),
            "traceability_links": [t.to_dict() for t in bundle.traceability_links],
        }
    return {
        "judged_mismatches": [
            {
                "description": j.description,
                "severity": j.severity,
                "stage": j.stage.value if j.stage else None,
                "requirement_refs": list(j.requirement_refs),
                "artifact_refs": list(j.artifact_refs),
            }
            for j in bundle.judged
        ]
    }


def _step_producer(session: Session, role: RoleName, task_kind: str) -> JournalEvent:
    phase_label = session.phase.value.lower()
    outcome = _run_role_task(session, role, task_kind)
    if isinstance(outcome, JournalEvent):
        return outcome
    completed = session._append(
        EventKind.AGENT_TASK_COMPLETED,
        {
            "role": role.value,
            "task": task_kind,
            "round": session.round_count,
            "attempts": outcome.attempts,
            "grounding": list(outcome.grounding_trace),
            "artifacts": _bundle_payload(outcome.bundle),
        },
    )
    if session.phase is Phase.AWAIT_CLARIFICATION:
        for exchange in session.pending():
            session._append(
                EventKind.CLARIFICATION_ASKED,
                {"question_id": exchange.question_id, "risk_id": exchange.risk_id, "question": exchange.question},
            )
    session._snapshot_artifacts(phase_label)
    return completed


def _step_evaluation(session: Session) -> JournalEvent:
    outcome = _run_role_task(session, RoleName.EVALUATOR, "evaluate")
    if isinstance(outcome, JournalEvent):
        return outcome
    session._append(
        EventKind.AGENT_TASK_COMPLETED,
        {
            "role": RoleName.EVALUATOR.value,
            "task": "evaluate",
            "round": session.round_count,
            "attempts": outcome.attempts,
            "grounding": list(outcome.grounding_trace),
            "artifacts": _bundle_payload(outcome.bundle),
        },
    )
    evaluation = evaluate_package(
        session.package,
        session._last_judged,
        threshold=session.config.severity_threshold,
        rules=session.rules,
    )
    next_round = session.round_count + 1
    if evaluation.verdict.decision is VerdictDecision.CONFIRMED:
        decision, routed = "confirmed", None
    elif next_round >= session.config.max_rounds:
        decision, routed = "abort", None
    else:
        decision, routed = "refine", evaluation.verdict.routed_stage
    session._append(
        EventKind.EVALUATION_COMPLETED,
        {
            "round": next_round,
            "mismatches": [m.to_dict() for m in evaluation.mismatches],
            "root_causes": [c.to_dict() for c in evaluation.root_causes],
            "suggestions": [s.to_dict() for s in evaluation.suggestions],
            "decision": decision,
            "routed_stage": routed.value if routed else None,
            "open_mismatch_ids": [m.id for m in evaluation.verdict.open_mismatches],
        },
    )
    session._snapshot_artifacts("evaluation")
    if decision == "confirmed":
        return session._append(
            EventKind.SESSION_CONFIRMED,
            {"digest": package_digest(session.package), "round_count": session.round_count},
        )
    if decision == "abort":
        return session._append(
            EventKind.SESSION_ABORTED,
            {"cause": "round cap reached with open mismatches", "round_count": session.round_count},
        )
    directives = [s.directive for s in evaluation.suggestions if s.target_stage is routed]
    return session._append(
        EventKind.REFINEMENT_ROUTED,
        {"stage": routed.value, "directives": directives, "source": "evaluator"},
    )


def submit_clarification_answer(session: Session, question_id: str, answer_text: str) -> Session:
    """Record a stakeholder answer; the last answer returns the session to ANALYSIS."""
    if session.phase is not Phase.AWAIT_CLARIFICATION:
        raise InvalidState(f"session is not awaiting clarification (phase {session.phase.value})")
    exchange = next((c for c in session.package.clarifications if c.question_id == question_id), None)
    if exchange is None:
        raise UnknownQuestion(f"no clarification question {question_id!r}")
    if exchange.status is ClarificationStatus.ANSWERED:
        raise AlreadyAnswered(f"question {question_id!r} already answered")
    if not answer_text or not answer_text.strip():
        raise EmptyText("answer text must be non-empty")
    session._append(EventKind.CLARIFICATION_ANSWERED, {"question_id": question_id, "answer": answer_text})
    return session


def run_to_completion(
    session: Session,
    *,
    answer_provider: Callable[[ClarificationExchange], str] | None = None,
) -> DesignPackage:
    """Step until CONFIRMED or ABORTED; terminates for every backend."""
    # Hard safety net; the round cap and task budget bound the loop far earlier.
    max_iterations = 20 * session.config.task_budget + 100
    for _ in range(max_iterations):
        if session.is_terminal:
            return session.package
        if session.phase is Phase.AWAIT_CLARIFICATION:
            if answer_provider is None:
                raise InvalidState("session awaits clarification answers and no provider was given")
            for exchange in session.pending():
                submit_clarification_answer(session, exchange.question_id, answer_provider(exchange))
            continue
        step(session)
    raise RuntimeError("session failed to terminate within the safety bound")


def stakeholder_reject(session: Session, comment: str) -> JournalEvent:
    """Reopen one refinement round after a stakeholder rejection, budget allowing."""
    if session.phase is not Phase.CONFIRMED:
        raise InvalidState(f"verdict can only be recorded on a confirmed session (phase {session.phase.value})")
    if session.stakeholder_reject_used:
        raise InvalidState("the one stakeholder rejection round was already used")
    if session.round_count >= session.config.max_rounds:
        raise InvalidState("no refinement budget left for a rejection round")
    description = f"stakeholder rejected the design: {comment.strip() or 'no comment given'}"
    mismatch = MismatchReport(
        id=f"judged:stakeholder:{session.round_count}",
        kind=MismatchKind.JUDGED,
        severity=session.config.severity_threshold,
        requirement_refs=(),
        artifact_refs=(),
        description=description,
    )
    return session._append(
        EventKind.REFINEMENT_ROUTED,
        {
            "stage": Stage.DESIGN.value,
            "directives": [f"resolve judged: {description}"],
            "source": "stakeholder",
            "mismatches": [mismatch.to_dict()],
        },
    )


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def replay(journal_lines: Iterable[str]) -> Session:
    """Reconstruct session state by folding events; no backend is ever invoked."""
    lines = [line for line in journal_lines if line.strip()]
    if not lines:
        raise EmptyJournal("journal is empty")
    events: list[JournalEvent] = []
    for i, line in enumerate(lines):
        try:
            events.append(JournalEvent.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise CorruptJournal(f"line {i + 1}: {exc}") from exc
    if events[0].kind is not EventKind.SESSION_STARTED:
        raise CorruptJournal(f"first event must be SessionStarted, got {events[0].kind.value}")
    for i, event in enumerate(events):
        if event.seq != i + 1:
            raise CorruptJournal(f"sequence gap: expected {i + 1}, got {event.seq}")
    session = Session()
    for event in events:
        session.journal.append(event)
        _apply_event(session, event)
    return session
