"""Agent runtime: prompt assembly, pluggable completion backends, output repair.

A task turns (role, task kind, session snapshot, retrieved knowledge) into a
deterministic prompt, calls the backend, and parses the single fenced JSON
block of the reply into artifact types. Parse or validation failures trigger
up to two repair re-asks that append the exact validation errors; the backend
is therefore called at most three times per task.
"""

from __future__ import annotations

import json
import logging
import os
import re
import string
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Protocol, Sequence

import httpx

from maad.artifacts import (
    ArchitecturalDecisionRecord,
    AsrTag,
    ClarificationExchange,
    ClarificationStatus,
    ClassModel,
    DeploymentArtifact,
    DeploymentModel,
    DesignPackage,
    LogicalView,
    PhysicalView,
    QualityAttributePriority,
    Requirement,
    RiskFlag,
    RiskResolution,
    SequenceModel,
    TraceabilityLink,
    validate_package,
)
from maad.common import BackendUnavailable, MaadError, MissingInput, RoleName, Stage
from maad.diagrams import DiagramError, parse_diagram
from maad.knowledge import KnowledgeChunk

logger = logging.getLogger(__name__)

__all__ = [
    "AdversarialBackend",
    "AgentOutputInvalid",
    "AgentRole",
    "AgentTaskResult",
    "AnalystBundle",
    "CompletionBackend",
    "CompletionParams",
    "DesignerBundle",
    "EvaluatorBundle",
    "JudgedMismatch",
    "ModelerBundle",
    "OutputSchemaKind",
    "Prompt",
    "RemoteBackend",
    "ReplayBackend",
    "SessionSnapshot",
    "StaticBackend",
    "TaskRef",
    "ValidationContext",
    "assemble_prompt",
    "load_roles",
    "run_agent_task",
]

ALLOWED_PLACEHOLDERS = {"srs", "prior_artifacts", "knowledge", "refinement_directives", "clarification_answers"}
REPAIR_BUDGET = 2

ENV_ENDPOINT = "MAAD_LLM_ENDPOINT"
ENV_API_KEY = "MAAD_LLM_API_KEY"

_FENCE_RE = re.compile(r"```[A-Za-z0-9_-]*\n(.*?)```", re.DOTALL)


class AgentOutputInvalid(MaadError):
    """Raised when the repair budget is exhausted; carries all raw replies."""

    code = "AgentOutputInvalid"

    def __init__(self, role: RoleName, raw_outputs: list[str], errors: list[list[str]]) -> None:
        last = "; ".join(errors[-1]) if errors else "no reply"
        super().__init__(f"{role.value} output invalid after {len(raw_outputs)} attempt(s): {last}")
        self.role = role
        self.raw_outputs = raw_outputs
        self.errors = errors


class OutputSchemaKind(str, Enum):
    ANALYSIS_BUNDLE = "analysis_bundle"
    MODELING_BUNDLE = "modeling_bundle"
    DESIGN_BUNDLE = "design_bundle"
    EVALUATION_BUNDLE = "evaluation_bundle"


@dataclass(frozen=True)
class AgentRole:
    name: RoleName
    system_template: str
    user_template: str
    output_schema_kind: OutputSchemaKind


@dataclass(frozen=True)
class Prompt:
    system: str
    user: str
    knowledge_citations: tuple[str, ...] = ()


@dataclass(frozen=True)
class CompletionParams:
    temperature: float = 0.0
    max_tokens: int = 4096


@dataclass(frozen=True)
class TaskRef:
    role: RoleName
    round: int
    task_kind: str

    @property
    def key(self) -> str:
        return f"{self.role.value}_{self.round}_{self.task_kind}"


@dataclass(frozen=True)
class SessionSnapshot:
    """The inputs a role's prompt may draw on at one point of a session."""

    srs_text: str
    prior_artifacts: dict[str, Any] | None = None
    clarification_answers: tuple[tuple[str, str, str], ...] = ()  # (question_id, question, answer)
    refinement_directives: tuple[str, ...] = ()
    interactive: bool = True


_SCHEMA_BY_ROLE = {
    RoleName.ANALYST: OutputSchemaKind.ANALYSIS_BUNDLE,
    RoleName.MODELER: OutputSchemaKind.MODELING_BUNDLE,
    RoleName.DESIGNER: OutputSchemaKind.DESIGN_BUNDLE,
    RoleName.EVALUATOR: OutputSchemaKind.EVALUATION_BUNDLE,
}

_roles_cache: dict[RoleName, AgentRole] | None = None


def load_roles() -> dict[RoleName, AgentRole]:
    """Load the four role definitions from the packaged template files."""
    global _roles_cache
    if _roles_cache is None:
        roles: dict[RoleName, AgentRole] = {}
        for name in RoleName:
            raw = resources.files("maad.templates").joinpath(f"{name.value}.txt").read_text(encoding="utf-8")
            system, user = _split_template(raw, name.value)
            _check_placeholders(user, name.value)
            _check_placeholders(system, name.value)
            roles[name] = AgentRole(name, system, user, _SCHEMA_BY_ROLE[name])
        _roles_cache = roles
    return _roles_cache


def _split_template(raw: str, name: str) -> tuple[str, str]:
    if not raw.startswith("[system]\n") or "\n[user]\n" not in raw:
        raise ValueError(f"template {name}: expected [system] and [user] sections")
    system, user = raw[len("[system]\n") :].split("\n[user]\n", 1)
    return system.strip(), user.strip()


def _check_placeholders(template: str, name: str) -> None:
    found = {m.group("named") for m in string.Template.pattern.finditer(template) if m.group("named")}
    unknown = found - ALLOWED_PLACEHOLDERS
    if unknown:
        raise ValueError(f"template {name}: unknown placeholders {sorted(unknown)}")


def assemble_prompt(
    role: AgentRole,
    task_kind: str,
    snapshot: SessionSnapshot,
    retrieved_chunks: Sequence[KnowledgeChunk] = (),
) -> Prompt:
    """Deterministic prompt assembly; identical inputs yield identical bytes.

    The knowledge section lists chunks in retrieval rank order, each introduced
    by its [K:id] marker, and is omitted entirely when nothing was retrieved.
    Refinement directives appear only on refinement re-runs.
    """
    values = {
        "srs": snapshot.srs_text,
        "knowledge": _knowledge_section(retrieved_chunks),
        "refinement_directives": _directives_section(snapshot.refinement_directives),
        "clarification_answers": _clarification_section(snapshot),
        "prior_artifacts": _prior_artifacts_section(role, snapshot),
    }
    system = _render(role.system_template, values)
    user = _render(role.user_template, values)
    return Prompt(system=system, user=user, knowledge_citations=tuple(c.chunk_id for c in retrieved_chunks))


def _render(template: str, values: dict[str, str | None]) -> str:
    needed = {m.group("named") for m in string.Template.pattern.finditer(template) if m.group("named")}
    for name in needed:
        if values.get(name) is None:
            raise MissingInput(f"prompt input {name!r} is not available", placeholder=name)
    rendered = string.Template(template).safe_substitute({k: v for k, v in values.items() if v is not None})
    return re.sub(r"\n{3,}", "\n\n", rendered).strip()


def _knowledge_section(chunks: Sequence[KnowledgeChunk]) -> str:
    if not chunks:
        return ""
    parts = [f"[K:{c.chunk_id}] {c.text}" for c in chunks]
    return "## Retrieved Knowledge\n" + "\n\n".join(parts)


def _directives_section(directives: tuple[str, ...]) -> str:
    if not directives:
        return ""
    return "## Refinement Directives\n" + "\n".join(f"- {d}" for d in directives)


def _clarification_section(snapshot: SessionSnapshot) -> str:
    if not snapshot.interactive:
        return (
            "## Operating Mode\nNon-interactive run: resolve every open risk with a "
            'documented assumption (resolution "assumed") and ask no questions.'
        )
    if not snapshot.clarification_answers:
        return ""
    lines = ["## Stakeholder Answers"]
    for qid, question, answer in snapshot.clarification_answers:
        lines.append(f"Q ({qid}): {question}")
        lines.append(f"A: {answer}")
    return "\n".join(lines)


def _prior_artifacts_section(role: AgentRole, snapshot: SessionSnapshot) -> str | None:
    if "$prior_artifacts" not in role.user_template and "${prior_artifacts}" not in role.user_template:
        return ""
    if snapshot.prior_artifacts is None:
        return None  # surfaces as MissingInput
    lines = ["## Prior Artifacts"]
    for name in sorted(snapshot.prior_artifacts):
        lines.append(f"### {name}")
        lines.append(json.dumps(snapshot.prior_artifacts[name], indent=2, sort_keys=True, ensure_ascii=False))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class CompletionBackend(Protocol):
    def complete(self, prompt: Prompt, params: CompletionParams, task_ref: TaskRef) -> str: ...


class RemoteBackend:
    """Single HTTP POST endpoint; endpoint/key default to the environment."""

    def __init__(self, endpoint: str | None = None, api_key: str | None = None, model: str = "default",
                 timeout: float = 120.0) -> None:
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT, "")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.model = model
        self.timeout = timeout

    def complete(self, prompt: Prompt, params: CompletionParams, task_ref: TaskRef) -> str:
        if not self.endpoint:
            raise BackendUnavailable(f"no completion endpoint configured ({ENV_ENDPOINT})")
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "system": prompt.system,
            "user": prompt.user,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        try:
            response = httpx.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
            response.raise_for_status()
            return str(response.json()["text"])
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise BackendUnavailable(f"completion endpoint failed: {exc}") from exc


class ReplayBackend:
    """Bit-deterministic backend serving canned files keyed by role + round + task.

    The first call on a key reads `<role>_<round>_<task>.txt`; the n-th repeat
    of the same key (clarification re-runs, scripted repairs) reads
    `<role>_<round>_<task>_<n>.txt`.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._calls: dict[str, int] = {}

    def complete(self, prompt: Prompt, params: CompletionParams, task_ref: TaskRef) -> str:
        n = self._calls.get(task_ref.key, 0) + 1
        self._calls[task_ref.key] = n
        name = f"{task_ref.key}.txt" if n == 1 else f"{task_ref.key}_{n}.txt"
        path = self.root / name
        if not path.exists():
            raise BackendUnavailable(f"no replay file {name} under {self.root}")
        return path.read_text(encoding="utf-8")


class StaticBackend:
    """Returns scripted texts in order (last one repeats); for unit tests."""

    def __init__(self, *texts: str) -> None:
        self.texts = list(texts)
        self.calls = 0

    def complete(self, prompt: Prompt, params: CompletionParams, task_ref: TaskRef) -> str:
        self.calls += 1
        return self.texts[min(self.calls - 1, len(self.texts) - 1)]


def _fenced(payload: Any) -> str:
    return "```json\n" + json.dumps(payload, indent=2, sort_keys=True) + "\n```"


class AdversarialBackend:
    """Schema-valid minimal outputs plus a scripted judged-mismatch stream.

    Producer roles always return the same tiny consistent design, so every
    mismatch the Evaluator reports comes from `judged_rounds`: entry i feeds
    evaluator call i, and the stream is empty once exhausted.
    """

    def __init__(self, judged_rounds: Sequence[Sequence[dict]] = ()) -> None:
        self.judged_rounds = [list(r) for r in judged_rounds]
        self.evaluator_calls = 0
        self.task_calls = 0

    def complete(self, prompt: Prompt, params: CompletionParams, task_ref: TaskRef) -> str:
        self.task_calls += 1
        if task_ref.role is RoleName.EVALUATOR:
            i = self.evaluator_calls
            self.evaluator_calls += 1
            judged = self.judged_rounds[i] if i < len(self.judged_rounds) else []
            return _fenced({"judged_mismatches": judged, "grounding": []})
        return _fenced(_CANNED_PRODUCER_OUTPUTS[task_ref.role])


_CANNED_PRODUCER_OUTPUTS: dict[RoleName, dict] = {
    RoleName.ANALYST: {
        "requirements": [
            {"id": "R-001", "text": "the system provides its core feature", "kind": "functional",
             "source_span": [0, 1], "attributes": [], "status": "active"}
        ],
        "asr_tags": [],
        "risk_flags": [],
        "clarifications": [],
        "grounding": [],
    },
    RoleName.MODELER: {
        "qa_priorities": [],
        "adrs": [
            {"id": "ADR-001", "category": "style", "title": "single service", "context": "small scope",
             "decision": "one deployable service", "alternatives": ["split services"],
             "consequences": "simple operations", "addresses": ["R-001"], "grounding": []}
        ],
        "logical_view": {
            "components": [{"id": "cmp-core", "name": "Core", "responsibility": "core feature", "domain": "core"}],
            "relations": [],
        },
        "physical_view": {
            "nodes": [{"id": "node-main", "name": "Main", "kind": "server"}],
            "allocations": [{"component_id": "cmp-core", "node_id": "node-main"}],
            "links": [],
        },
        "traceability_links": [{"requirement_id": "R-001", "element_path": "adrs/ADR-001"}],
        "grounding": [],
    },
    RoleName.DESIGNER: {
        "class_diagram": "@startuml\nclass Core\n@enduml",
        "sequence_diagrams": ["@startuml\nactor User\nparticipant Core\nUser -> Core : run()\n@enduml"],
        "deployment_diagram": "@startuml\nnode Main {\n  artifact CoreApp\n}\n@enduml",
        "artifact_realizations": {"CoreApp": "cmp-core"},
        "traceability_links": [{"requirement_id": "R-001", "element_path": "class_model/classes/Core"}],
        "grounding": [],
    },
}


# ---------------------------------------------------------------------------
# Output bundles and parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalystBundle:
    requirements: tuple[Requirement, ...]
    asr_tags: tuple[AsrTag, ...]
    risk_flags: tuple[RiskFlag, ...]
    clarifications: tuple[ClarificationExchange, ...]
    grounding: tuple[str, ...] = ()


@dataclass(frozen=True)
class ModelerBundle:
    qa_priorities: tuple[QualityAttributePriority, ...]
    adrs: tuple[ArchitecturalDecisionRecord, ...]
    logical_view: LogicalView
    physical_view: PhysicalView
    traceability_links: tuple[TraceabilityLink, ...]
    grounding: tuple[str, ...] = ()


@dataclass(frozen=True)
class DesignerBundle:
    class_model: ClassModel
    sequence_models: tuple[SequenceModel, ...]
    deployment_model: DeploymentModel
    traceability_links: tuple[TraceabilityLink, ...]
    grounding: tuple[str, ...] = ()


@dataclass(frozen=True)
class JudgedMismatch:
    description: str
    severity: int
    stage: Stage | None = None
    requirement_refs: tuple[str, ...] = ()
    artifact_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class EvaluatorBundle:
    judged: tuple[JudgedMismatch, ...]
    grounding: tuple[str, ...] = ()


Bundle = AnalystBundle | ModelerBundle | DesignerBundle | EvaluatorBundle


@dataclass(frozen=True)
class ValidationContext:
    """What agent output is validated against at this point of the session."""

    interactive: bool = True
    base_package: DesignPackage = field(default_factory=DesignPackage)
    allowed_chunks: frozenset[str] = frozenset()
    srs_length: int | None = None


@dataclass(frozen=True)
class AgentTaskResult:
    bundle: Bundle
    grounding_trace: tuple[str, ...]
    attempts: int


def extract_fenced_block(raw: str) -> tuple[str | None, list[str]]:
    """The reply must contain exactly one fenced block; everything else is ignored."""
    blocks = _FENCE_RE.findall(raw)
    if len(blocks) != 1:
        return None, [f"expected exactly one fenced code block, found {len(blocks)}"]
    return blocks[0], []


def _parse_json(block: str) -> tuple[Any, list[str]]:
    try:
        return json.loads(block), []
    except json.JSONDecodeError as exc:
        return None, [f"fenced block is not valid JSON: {exc}"]


def _object_with(data: Any, required: list[str], errors: list[str]) -> dict:
    if not isinstance(data, dict):
        errors.append(f"artifact payload must be a JSON object, got {type(data).__name__}")
        return {}
    for key in required:
        if key not in data:
            errors.append(f"missing required field {key!r}")
    return data


def _grounding(data: dict, allowed: frozenset[str], errors: list[str]) -> tuple[str, ...]:
    raw = data.get("grounding", [])
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        errors.append("grounding must be a list of chunk ids")
        return ()
    unknown = [cid for cid in raw if cid not in allowed]
    if unknown:
        errors.append(f"grounding cites chunks absent from the prompt: {unknown}")
    return tuple(raw)


def _items(data: dict, key: str, builder, path: str, errors: list[str]) -> tuple:
    out = []
    raw = data.get(key, [])
    if not isinstance(raw, list):
        errors.append(f"{key} must be an array")
        return ()
    for i, item in enumerate(raw):
        try:
            out.append(builder(item, f"{path}[{i}]"))
        except ValueError as exc:
            errors.append(str(exc))
    return tuple(out)


def parse_analyst_output(data: Any, ctx: ValidationContext) -> tuple[AnalystBundle | None, list[str]]:
    errors: list[str] = []
    obj = _object_with(data, ["requirements", "asr_tags", "risk_flags", "clarifications"], errors)
    requirements = _items(obj, "requirements", Requirement.from_dict, "requirements", errors)
    asr_tags = _items(obj, "asr_tags", AsrTag.from_dict, "asr_tags", errors)
    risk_flags = _items(obj, "risk_flags", RiskFlag.from_dict, "risk_flags", errors)
    clarifications = _items(obj, "clarifications", ClarificationExchange.from_dict, "clarifications", errors)
    grounding = _grounding(obj, ctx.allowed_chunks, errors)
    if errors:
        return None, errors
    probe = DesignPackage(
        requirement_set=requirements, asr_tags=asr_tags, risk_flags=risk_flags, clarifications=clarifications
    )
    errors.extend(f"{v.path}: {v.message}" for v in validate_package(probe, srs_length=ctx.srs_length))
    if not requirements:
        errors.append("at least one requirement is required")
    pending = [c.question_id for c in clarifications if c.status is ClarificationStatus.PENDING]
    if not ctx.interactive:
        if pending:
            errors.append(f"non-interactive run must not leave pending clarifications: {pending}")
        still_open = [r.id for r in risk_flags if r.resolution is RiskResolution.OPEN]
        if still_open:
            errors.append(f"non-interactive run must resolve risks by assumption: {still_open}")
    if errors:
        return None, errors
    return AnalystBundle(requirements, asr_tags, risk_flags, clarifications, grounding), []


def parse_modeler_output(data: Any, ctx: ValidationContext) -> tuple[ModelerBundle | None, list[str]]:
    errors: list[str] = []
    obj = _object_with(data, ["qa_priorities", "adrs", "logical_view", "physical_view", "traceability_links"], errors)
    qa = _items(obj, "qa_priorities", QualityAttributePriority.from_dict, "qa_priorities", errors)
    adrs = _items(obj, "adrs", ArchitecturalDecisionRecord.from_dict, "adrs", errors)
    links = _items(obj, "traceability_links", TraceabilityLink.from_dict, "traceability_links", errors)
    logical = LogicalView()
    physical = PhysicalView()
    if "logical_view" in obj:
        try:
            logical = LogicalView.from_dict(obj["logical_view"])
        except ValueError as exc:
            errors.append(str(exc))
    if "physical_view" in obj:
        try:
            physical = PhysicalView.from_dict(obj["physical_view"])
        except ValueError as exc:
            errors.append(str(exc))
    grounding = _grounding(obj, ctx.allowed_chunks, errors)
    for adr in adrs:
        bad = [cid for cid in adr.grounding if cid not in ctx.allowed_chunks]
        if bad:
            errors.append(f"adr {adr.id} cites chunks absent from the prompt: {bad}")
    if errors:
        return None, errors
    probe = replace(
        ctx.base_package,
        qa_priorities=qa,
        adrs=adrs,
        logical_view=logical,
        physical_view=physical,
        traceability_links=links,
        class_model=ClassModel(),
        sequence_models=(),
        deployment_model=DeploymentModel(),
    )
    errors.extend(f"{v.path}: {v.message}" for v in validate_package(probe))
    if errors:
        return None, errors
    return ModelerBundle(qa, adrs, logical, physical, links, grounding), []


def parse_designer_output(data: Any, ctx: ValidationContext) -> tuple[DesignerBundle | None, list[str]]:
    errors: list[str] = []
    obj = _object_with(
        data,
        ["class_diagram", "sequence_diagrams", "deployment_diagram", "artifact_realizations", "traceability_links"],
        errors,
    )
    if errors:
        return None, errors
    class_model = ClassModel()
    sequence_models: list[SequenceModel] = []
    deployment = DeploymentModel()
    try:
        class_model = parse_diagram("class", str(obj["class_diagram"]))
    except DiagramError as exc:
        errors.append(f"class_diagram: {exc.message}")
    raw_seqs = obj["sequence_diagrams"]
    if not isinstance(raw_seqs, list) or not raw_seqs:
        errors.append("sequence_diagrams must be a non-empty array of diagram texts")
        raw_seqs = []
    for i, text in enumerate(raw_seqs):
        try:
            sequence_models.append(parse_diagram("sequence", str(text)))
        except DiagramError as exc:
            errors.append(f"sequence_diagrams[{i}]: {exc.message}")
    try:
        deployment = parse_diagram("deployment", str(obj["deployment_diagram"]))
    except DiagramError as exc:
        errors.append(f"deployment_diagram: {exc.message}")
    realizations = obj.get("artifact_realizations", {})
    if not isinstance(realizations, dict):
        errors.append("artifact_realizations must be an object mapping artifact name to component id")
        realizations = {}
    known = {a.name for a in deployment.artifacts}
    for name in sorted(realizations):
        if name not in known:
            errors.append(f"artifact_realizations names unknown artifact {name!r}")
    links = _items(obj, "traceability_links", TraceabilityLink.from_dict, "traceability_links", errors)
    grounding = _grounding(obj, ctx.allowed_chunks, errors)
    if errors:
        return None, errors
    deployment = replace(
        deployment,
        artifacts=tuple(
            replace(a, realizes=str(realizations[a.name])) if a.name in realizations else a
            for a in deployment.artifacts
        ),
    )
    probe = replace(
        ctx.base_package,
        class_model=class_model,
        sequence_models=tuple(sequence_models),
        deployment_model=deployment,
        traceability_links=ctx.base_package.traceability_links + links,
    )
    errors.extend(f"{v.path}: {v.message}" for v in validate_package(probe))
    if errors:
        return None, errors
    return DesignerBundle(class_model, tuple(sequence_models), deployment, links, grounding), []


def parse_evaluator_output(data: Any, ctx: ValidationContext) -> tuple[EvaluatorBundle | None, list[str]]:
    errors: list[str] = []
    obj = _object_with(data, ["judged_mismatches"], errors)
    judged: list[JudgedMismatch] = []
    raw = obj.get("judged_mismatches", [])
    if not isinstance(raw, list):
        errors.append("judged_mismatches must be an array")
        raw = []
    known_requirements = {r.id for r in ctx.base_package.requirement_set}
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            errors.append(f"judged_mismatches[{i}] must be an object")
            continue
        unknown = sorted(set(item) - {"description", "severity", "stage", "requirement_refs", "artifact_refs"})
        if unknown:
            errors.append(f"judged_mismatches[{i}]: unexpected fields {unknown}")
            continue
        description = item.get("description")
        severity = item.get("severity")
        if not isinstance(description, str) or not description.strip():
            errors.append(f"judged_mismatches[{i}].description must be non-empty prose")
            continue
        if not isinstance(severity, int) or isinstance(severity, bool) or not 1 <= severity <= 4:
            errors.append(f"judged_mismatches[{i}].severity must be an integer in [1, 4]")
            continue
        stage = None
        if item.get("stage") is not None:
            try:
                stage = Stage(item["stage"])
            except ValueError:
                errors.append(f"judged_mismatches[{i}].stage must be analysis, modeling, or design")
                continue
        refs = tuple(str(r) for r in item.get("requirement_refs", []))
        bad = [r for r in refs if r not in known_requirements]
        if bad:
            errors.append(f"judged_mismatches[{i}].requirement_refs name unknown requirements: {bad}")
            continue
        judged.append(
            JudgedMismatch(description.strip(), severity, stage, refs, tuple(str(a) for a in item.get("artifact_refs", [])))
        )
    grounding = _grounding(obj, ctx.allowed_chunks, errors)
    if errors:
        return None, errors
    return EvaluatorBundle(tuple(judged), grounding), []


_PARSERS = {
    RoleName.ANALYST: parse_analyst_output,
    RoleName.MODELER: parse_modeler_output,
    RoleName.DESIGNER: parse_designer_output,
    RoleName.EVALUATOR: parse_evaluator_output,
}


def run_agent_task(
    role_name: RoleName,
    task_kind: str,
    snapshot: SessionSnapshot,
    backend: CompletionBackend,
    *,
    round_number: int = 0,
    retrieved_chunks: Sequence[KnowledgeChunk] = (),
    context: ValidationContext | None = None,
    params: CompletionParams = CompletionParams(),
) -> AgentTaskResult:
    """Run one agent task with the shared repair loop (at most 3 backend calls)."""
    role = load_roles()[role_name]
    ctx = context or ValidationContext()
    prompt = assemble_prompt(role, task_kind, snapshot, retrieved_chunks)
    task_ref = TaskRef(role_name, round_number, task_kind)
    parser = _PARSERS[role_name]
    raws: list[str] = []
    all_errors: list[list[str]] = []
    current = prompt
    for _ in range(1 + REPAIR_BUDGET):
        raw = backend.complete(current, params, task_ref)
        raws.append(raw)
        block, errors = extract_fenced_block(raw)
        data = None
        if not errors:
            data, errors = _parse_json(block)
        bundle = None
        if not errors:
            bundle, errors = parser(data, ctx)
        if bundle is not None and not errors:
            citations = set(prompt.knowledge_citations)
            trace = tuple(cid for cid in bundle.grounding if cid in citations)
            return AgentTaskResult(bundle, trace, attempts=len(raws))
        all_errors.append(errors)
        logger.debug("%s output attempt %d invalid: %s", role_name.value, len(raws), errors)
        current = Prompt(
            system=prompt.system,
            user=prompt.user + _repair_section(errors),
            knowledge_citations=prompt.knowledge_citations,
        )
    raise AgentOutputInvalid(role_name, raws, all_errors)


def _repair_section(errors: list[str]) -> str:
    listing = "\n".join(f"- {e}" for e in errors)
    return (
        "\n\n## Validation Errors\nYour previous reply failed validation:\n"
        f"{listing}\nReturn the corrected artifact as exactly one fenced JSON block."
    )
