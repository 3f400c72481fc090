"""Deterministic verification: traceability, consistency, root causes, verdict.

These checks complement the Evaluator agent's judgment. They run first, so the
session never spends a completion call to find what a structural scan finds.
Severity and stage attribution come from a rules table shipped as data
(config/evaluation_rules.json) and overridable without a code change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from maad.agents import JudgedMismatch
from maad.artifacts import (
    AsrTag,
    DesignPackage,
    MismatchKind,
    MismatchReport,
    ParticipantKind,
    RefinementSuggestion,
    RequirementKind,
    RootCause,
    validate_package,
)
from maad.common import STAGE_ORDER, Stage, UnknownKind

__all__ = [
    "EvaluationOutcome",
    "EvaluationRules",
    "Verdict",
    "VerdictDecision",
    "attribute_root_cause",
    "check_consistency",
    "check_traceability",
    "decide_verdict",
    "evaluate_package",
]


class VerdictDecision(str, Enum):
    CONFIRMED = "confirmed"
    REFINE = "refine"


@dataclass(frozen=True)
class Verdict:
    decision: VerdictDecision
    routed_stage: Stage | None
    open_mismatches: tuple[MismatchReport, ...]


@dataclass(frozen=True)
class _Rule:
    kind: MismatchKind
    requirement_kind: RequirementKind | None
    severity: int | None
    stage: Stage


class EvaluationRules:
    """Severity/stage table; first matching row (by kind, then requirement kind) wins."""

    def __init__(self, rules: Sequence[_Rule]) -> None:
        self._rules = list(rules)

    @classmethod
    def load_default(cls) -> EvaluationRules:
        raw = resources.files("maad.config").joinpath("evaluation_rules.json").read_text(encoding="utf-8")
        return cls._from_json(raw)

    @classmethod
    def load(cls, path: str | Path) -> EvaluationRules:
        return cls._from_json(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def _from_json(cls, raw: str) -> EvaluationRules:
        rules = []
        for row in json.loads(raw):
            rules.append(
                _Rule(
                    kind=MismatchKind(row["kind"]),
                    requirement_kind=RequirementKind(row["requirement_kind"]) if "requirement_kind" in row else None,
                    severity=row.get("severity"),
                    stage=Stage(row["stage"]),
                )
            )
        return cls(rules)

    def _match(self, kind: MismatchKind, requirement_kind: RequirementKind | None) -> _Rule:
        for rule in self._rules:
            if rule.kind is kind and rule.requirement_kind in (None, requirement_kind):
                return rule
        raise UnknownKind(f"no evaluation rule for mismatch kind {kind.value!r}")

    def severity(self, kind: MismatchKind, requirement_kind: RequirementKind | None = None) -> int:
        severity = self._match(kind, requirement_kind).severity
        if severity is None:
            raise UnknownKind(f"mismatch kind {kind.value!r} has no fixed severity")
        return severity

    def stage(self, kind: MismatchKind, requirement_kind: RequirementKind | None = None) -> Stage:
        return self._match(kind, requirement_kind).stage


def check_traceability(
    asr_tags: Sequence[AsrTag], package: DesignPackage, rules: EvaluationRules | None = None
) -> list[MismatchReport]:
    """One uncovered_asr per ASR-tagged requirement with no traceability link."""
    rules = rules or EvaluationRules.load_default()
    linked = {link.requirement_id for link in package.traceability_links}
    kinds = {r.id: r.kind for r in package.requirement_set}
    out: list[MismatchReport] = []
    for tag in asr_tags:
        if tag.requirement_id in linked:
            continue
        out.append(
            MismatchReport(
                id=f"uncovered_asr:{tag.requirement_id}",
                kind=MismatchKind.UNCOVERED_ASR,
                severity=rules.severity(MismatchKind.UNCOVERED_ASR, kinds.get(tag.requirement_id)),
                requirement_refs=(tag.requirement_id,),
                artifact_refs=(),
                description=f"architecture-significant requirement {tag.requirement_id} "
                "is not addressed by any view, diagram, or decision record",
            )
        )
    return out


def check_consistency(package: DesignPackage, rules: EvaluationRules | None = None) -> list[MismatchReport]:
    """Cross-diagram consistency and allocation completeness.

    Emits diagram_inconsistency for sequence object participants missing from
    the class diagram and for deployment artifacts realizing unknown logical
    components; unallocated_component for components with no physical
    allocation; and dangling_reference only as defense in depth, when the
    package never went through validate_package.
    """
    rules = rules or EvaluationRules.load_default()
    out: list[MismatchReport] = []

    for violation in validate_package(package):
        out.append(
            MismatchReport(
                id=f"dangling:{violation.path}",
                kind=MismatchKind.DANGLING_REFERENCE,
                severity=rules.severity(MismatchKind.DANGLING_REFERENCE),
                requirement_refs=(),
                artifact_refs=(violation.path,),
                description=f"integrity violation: {violation.path}: {violation.message}",
            )
        )

    class_names = {c.name for c in package.class_model.classes}
    for i, seq in enumerate(package.sequence_models):
        for part in seq.participants:
            if part.kind is ParticipantKind.OBJECT and part.name not in class_names:
                path = f"sequence_models/{i}/participants/{part.name}"
                out.append(
                    MismatchReport(
                        id=f"diagram_inconsistency:{path}",
                        kind=MismatchKind.DIAGRAM_INCONSISTENCY,
                        severity=rules.severity(MismatchKind.DIAGRAM_INCONSISTENCY),
                        requirement_refs=(),
                        artifact_refs=(path,),
                        description=f"sequence participant {part.name} matches no class and is not an actor",
                    )
                )

    component_ids = {c.id for c in package.logical_view.components}
    for artifact in package.deployment_model.artifacts:
        if artifact.realizes is not None and artifact.realizes not in component_ids:
            path = f"deployment_model/artifacts/{artifact.name}"
            out.append(
                MismatchReport(
                    id=f"diagram_inconsistency:{path}",
                    kind=MismatchKind.DIAGRAM_INCONSISTENCY,
                    severity=rules.severity(MismatchKind.DIAGRAM_INCONSISTENCY),
                    requirement_refs=(),
                    artifact_refs=(path,),
                    description=f"deployment artifact {artifact.name} realizes unknown component "
                    f"{artifact.realizes}",
                )
            )

    allocated = {a.component_id for a in package.physical_view.allocations}
    for component in package.logical_view.components:
        if component.id not in allocated:
            path = f"logical_view/components/{component.id}"
            out.append(
                MismatchReport(
                    id=f"unallocated_component:{component.id}",
                    kind=MismatchKind.UNALLOCATED_COMPONENT,
                    severity=rules.severity(MismatchKind.UNALLOCATED_COMPONENT),
                    requirement_refs=(),
                    artifact_refs=(path,),
                    description=f"logical component {component.id} is allocated to no node",
                )
            )

    return out


def attribute_root_cause(
    mismatch: MismatchReport,
    *,
    requirement_kinds: Mapping[str, RequirementKind] | None = None,
    judged_stage: Stage | None = None,
    rules: EvaluationRules | None = None,
) -> RootCause:
    """Deterministic stage attribution per the rules table.

    uncovered_asr consults the requirement's kind (non_functional means no
    decision or tactic addressed it, a modeling gap; functional means the
    design left it out); judged mismatches use the stage the Evaluator agent
    assigned, defaulting per the table.
    """
    rules = rules or EvaluationRules.load_default()
    requirement_kinds = requirement_kinds or {}
    if mismatch.kind is MismatchKind.JUDGED:
        stage = judged_stage or rules.stage(MismatchKind.JUDGED)
        explanation = "judged by the evaluator agent"
        if judged_stage is None:
            explanation += " (stage defaulted)"
    elif mismatch.kind is MismatchKind.UNCOVERED_ASR:
        rid = mismatch.requirement_refs[0] if mismatch.requirement_refs else ""
        kind = requirement_kinds.get(rid)
        if kind is None:
            raise UnknownKind(f"uncovered_asr mismatch {mismatch.id} names no known requirement")
        stage = rules.stage(MismatchKind.UNCOVERED_ASR, kind)
        explanation = (
            f"{kind.value} requirement {rid} reached the evaluator without a covering element"
        )
    else:
        stage = rules.stage(mismatch.kind)
        explanation = f"{mismatch.kind.value} produced at the {stage.value} stage"
    return RootCause(mismatch_id=mismatch.id, stage=stage, explanation=explanation)


def decide_verdict(
    mismatches_with_causes: Sequence[tuple[MismatchReport, RootCause]], threshold: int
) -> Verdict:
    """Confirm when nothing at or above the threshold is open, else route upstream-first."""
    if not 1 <= threshold <= 4:
        raise ValueError(f"threshold {threshold} outside [1, 4]")
    open_pairs = [(m, c) for m, c in mismatches_with_causes if m.severity >= threshold]
    if not open_pairs:
        return Verdict(VerdictDecision.CONFIRMED, None, ())
    routed = min((c.stage for _, c in open_pairs), key=lambda s: STAGE_ORDER[s])
    return Verdict(VerdictDecision.REFINE, routed, tuple(m for m, _ in open_pairs))


@dataclass(frozen=True)
class EvaluationOutcome:
    mismatches: tuple[MismatchReport, ...]
    root_causes: tuple[RootCause, ...]
    suggestions: tuple[RefinementSuggestion, ...]
    verdict: Verdict


def evaluate_package(
    package: DesignPackage,
    judged: Iterable[JudgedMismatch] = (),
    *,
    threshold: int,
    rules: EvaluationRules | None = None,
) -> EvaluationOutcome:
    """Full evaluation pass: structural checks, judged merge, causes, verdict.

    Judged mismatches whose description exactly equals a structural one are
    dropped (the static check already pays for them).
    """
    rules = rules or EvaluationRules.load_default()
    kinds = {r.id: r.kind for r in package.requirement_set}
    structural = check_traceability(package.asr_tags, package, rules) + check_consistency(package, rules)
    seen_descriptions = {m.description for m in structural}
    mismatches = list(structural)
    judged_stages: dict[str, Stage | None] = {}
    for i, item in enumerate(judged):
        if item.description in seen_descriptions:
            continue
        report = MismatchReport(
            id=f"judged:{package.round_count}:{i}",
            kind=MismatchKind.JUDGED,
            severity=item.severity,
            requirement_refs=item.requirement_refs,
            artifact_refs=item.artifact_refs,
            description=item.description,
        )
        mismatches.append(report)
        judged_stages[report.id] = item.stage
    causes = tuple(
        attribute_root_cause(
            m, requirement_kinds=kinds, judged_stage=judged_stages.get(m.id), rules=rules
        )
        for m in mismatches
    )
    verdict = decide_verdict(list(zip(mismatches, causes)), threshold)
    cause_by_id = {c.mismatch_id: c for c in causes}
    suggestions = tuple(
        RefinementSuggestion(
            mismatch_id=m.id,
            target_stage=cause_by_id[m.id].stage,
            directive=f"resolve {m.kind.value}: {m.description}",
        )
        for m in verdict.open_mismatches
    )
    return EvaluationOutcome(tuple(mismatches), causes, suggestions, verdict)
