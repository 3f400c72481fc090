"""Artifact types exchanged between agents, integrity validation, and canonical bytes.

Every type is an immutable value; new versions are produced, never mutated in
place, so artifacts are safe to share across threads. Each type serializes to
UTF-8 JSON with the published field names; `canonicalize` defines the single
canonical byte form used for digests and parity checks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping

from maad.common import InvalidPackage, Stage, canonical_json

__all__ = [
    "AdrCategory",
    "Allocation",
    "ArchitecturalDecisionRecord",
    "ArtifactPlacement",
    "AsrTag",
    "ClarificationExchange",
    "ClarificationStatus",
    "ClassAttribute",
    "ClassModel",
    "ClassRelation",
    "ClassRelationKind",
    "Component",
    "ComponentRelation",
    "ComponentRelationKind",
    "DeploymentArtifact",
    "DeploymentModel",
    "DeploymentPath",
    "DesignPackage",
    "IntegrityViolation",
    "LogicalView",
    "Message",
    "MessageStyle",
    "MismatchKind",
    "MismatchReport",
    "NodeKind",
    "PackageVerdict",
    "Participant",
    "ParticipantKind",
    "PhysicalNode",
    "PhysicalView",
    "QualityAttribute",
    "QualityAttributePriority",
    "RefinementSuggestion",
    "Requirement",
    "RequirementKind",
    "RequirementStatus",
    "RiskFlag",
    "RiskKind",
    "RiskResolution",
    "RootCause",
    "SequenceModel",
    "TraceabilityLink",
    "UmlClass",
    "ViolationKind",
    "canonical_package_dict",
    "canonicalize",
    "element_path_exists",
    "package_digest",
    "parse_package",
    "validate_package",
]

JsonDict = dict[str, Any]


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------


class RequirementKind(str, Enum):
    FUNCTIONAL = "functional"
    NON_FUNCTIONAL = "non_functional"


class RequirementStatus(str, Enum):
    ACTIVE = "active"
    SUPERSEDED = "superseded"


class QualityAttribute(str, Enum):
    """The eight ISO/IEC 25010 product quality characteristics."""

    FUNCTIONAL_SUITABILITY = "functional_suitability"
    PERFORMANCE_EFFICIENCY = "performance_efficiency"
    COMPATIBILITY = "compatibility"
    USABILITY = "usability"
    RELIABILITY = "reliability"
    SECURITY = "security"
    MAINTAINABILITY = "maintainability"
    PORTABILITY = "portability"


class RiskKind(str, Enum):
    AMBIGUITY = "ambiguity"
    INCOMPLETENESS = "incompleteness"
    CONFLICT = "conflict"


class RiskResolution(str, Enum):
    OPEN = "open"
    CLARIFIED = "clarified"
    ASSUMED = "assumed"


class ClarificationStatus(str, Enum):
    PENDING = "pending"
    ANSWERED = "answered"


class AdrCategory(str, Enum):
    STYLE = "style"
    PATTERN = "pattern"
    TECHNOLOGY = "technology"


class ComponentRelationKind(str, Enum):
    USES = "uses"
    CONTAINS = "contains"
    PUBLISHES_TO = "publishes_to"


class NodeKind(str, Enum):
    SERVER = "server"
    DEVICE = "device"
    CONTAINER_HOST = "container_host"


class ClassRelationKind(str, Enum):
    INHERITS = "inherits"
    DEPENDS = "depends"
    AGGREGATES = "aggregates"
    COMPOSES = "composes"


class ParticipantKind(str, Enum):
    ACTOR = "actor"
    OBJECT = "object"


class MessageStyle(str, Enum):
    SYNC = "sync"
    ASYNC = "async"
    REPLY = "reply"


class MismatchKind(str, Enum):
    UNCOVERED_ASR = "uncovered_asr"
    DANGLING_REFERENCE = "dangling_reference"
    DIAGRAM_INCONSISTENCY = "diagram_inconsistency"
    UNALLOCATED_COMPONENT = "unallocated_component"
    JUDGED = "judged"


class PackageVerdict(str, Enum):
    UNCONFIRMED = "unconfirmed"
    CONFIRMED = "confirmed"
    ABORTED = "aborted"


class ViolationKind(str, Enum):
    DANGLING_REFERENCE = "dangling_reference"
    DUPLICATE_ID = "duplicate_id"
    INVALID_FIELD = "invalid_field"


# ---------------------------------------------------------------------------
# Schema-parse helpers (structural checks; invariants are validate_package's job)
# ---------------------------------------------------------------------------


def _fail(path: str, message: str) -> None:
    raise ValueError(f"{path}: {message}")


def _expect_object(value: Any, path: str, required: set[str], optional: set[str] | None = None) -> JsonDict:
    if not isinstance(value, Mapping):
        _fail(path, f"expected object, got {type(value).__name__}")
    allowed = required | (optional or set())
    unknown = sorted(k for k in value if k not in allowed)
    if unknown:
        _fail(path, f"unexpected fields: {unknown}")
    missing = sorted(k for k in required if k not in value)
    if missing:
        _fail(path, f"missing required fields: {missing}")
    return dict(value)


def _as_str(value: Any, path: str, allow_empty: bool = False) -> str:
    if not isinstance(value, str):
        _fail(path, f"expected string, got {type(value).__name__}")
    if not allow_empty and not value.strip():
        _fail(path, "must be a non-empty string")
    return value


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected integer, got {type(value).__name__}")
    return value


def _as_enum(enum_type: type, value: Any, path: str) -> Any:
    if isinstance(value, enum_type):
        return value
    try:
        return enum_type(value)
    except (ValueError, TypeError):
        allowed = ", ".join(sorted(item.value for item in enum_type))
        _fail(path, f"invalid value {value!r}; expected one of: {allowed}")


def _as_list(value: Any, path: str) -> list[Any]:
    if not isinstance(value, (list, tuple)):
        _fail(path, f"expected array, got {type(value).__name__}")
    return list(value)


def _as_str_tuple(value: Any, path: str) -> tuple[str, ...]:
    return tuple(_as_str(v, f"{path}[{i}]") for i, v in enumerate(_as_list(value, path)))


# ---------------------------------------------------------------------------
# Analyst artifacts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Requirement:
    id: str
    text: str
    kind: RequirementKind
    source_span: tuple[int, int]
    attributes: tuple[QualityAttribute, ...] = ()
    status: RequirementStatus = RequirementStatus.ACTIVE

    def to_dict(self) -> JsonDict:
        return {
            "id": self.id,
            "text": self.text,
            "kind": self.kind.value,
            "source_span": list(self.source_span),
            "attributes": [a.value for a in self.attributes],
            "status": self.status.value,
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "requirement") -> Requirement:
        obj = _expect_object(data, path, {"id", "text", "kind", "source_span"}, {"attributes", "status"})
        span = _as_list(obj["source_span"], f"{path}.source_span")
        if len(span) != 2:
            _fail(f"{path}.source_span", "expected [start, end]")
        return cls(
            id=_as_str(obj["id"], f"{path}.id"),
            text=_as_str(obj["text"], f"{path}.text"),
            kind=_as_enum(RequirementKind, obj["kind"], f"{path}.kind"),
            source_span=(_as_int(span[0], f"{path}.source_span[0]"), _as_int(span[1], f"{path}.source_span[1]")),
            attributes=tuple(
                _as_enum(QualityAttribute, a, f"{path}.attributes[{i}]")
                for i, a in enumerate(_as_list(obj.get("attributes", []), f"{path}.attributes"))
            ),
            status=_as_enum(RequirementStatus, obj.get("status", "active"), f"{path}.status"),
        )


@dataclass(frozen=True)
class AsrTag:
    requirement_id: str
    rationale: str
    criticality: int

    def to_dict(self) -> JsonDict:
        return {"requirement_id": self.requirement_id, "rationale": self.rationale, "criticality": self.criticality}

    @classmethod
    def from_dict(cls, data: Any, path: str = "asr_tag") -> AsrTag:
        obj = _expect_object(data, path, {"requirement_id", "rationale", "criticality"})
        return cls(
            requirement_id=_as_str(obj["requirement_id"], f"{path}.requirement_id"),
            rationale=_as_str(obj["rationale"], f"{path}.rationale"),
            criticality=_as_int(obj["criticality"], f"{path}.criticality"),
        )


@dataclass(frozen=True)
class RiskFlag:
    id: str
    kind: RiskKind
    affected_requirement_ids: tuple[str, ...]
    description: str
    resolution: RiskResolution = RiskResolution.OPEN
    assumption: str | None = None

    def to_dict(self) -> JsonDict:
        out: JsonDict = {
            "id": self.id,
            "kind": self.kind.value,
            "affected_requirement_ids": list(self.affected_requirement_ids),
            "description": self.description,
            "resolution": self.resolution.value,
        }
        if self.assumption is not None:
            out["assumption"] = self.assumption
        return out

    @classmethod
    def from_dict(cls, data: Any, path: str = "risk_flag") -> RiskFlag:
        obj = _expect_object(
            data, path, {"id", "kind", "affected_requirement_ids", "description"}, {"resolution", "assumption"}
        )
        assumption = obj.get("assumption")
        if assumption is not None:
            assumption = _as_str(assumption, f"{path}.assumption")
        return cls(
            id=_as_str(obj["id"], f"{path}.id"),
            kind=_as_enum(RiskKind, obj["kind"], f"{path}.kind"),
            affected_requirement_ids=_as_str_tuple(obj["affected_requirement_ids"], f"{path}.affected_requirement_ids"),
            description=_as_str(obj["description"], f"{path}.description"),
            resolution=_as_enum(RiskResolution, obj.get("resolution", "open"), f"{path}.resolution"),
            assumption=assumption,
        )


@dataclass(frozen=True)
class ClarificationExchange:
    question_id: str
    risk_id: str
    question: str
    answer: str | None = None
    status: ClarificationStatus = ClarificationStatus.PENDING

    def to_dict(self) -> JsonDict:
        out: JsonDict = {
            "question_id": self.question_id,
            "risk_id": self.risk_id,
            "question": self.question,
            "status": self.status.value,
        }
        if self.answer is not None:
            out["answer"] = self.answer
        return out

    @classmethod
    def from_dict(cls, data: Any, path: str = "clarification") -> ClarificationExchange:
        obj = _expect_object(data, path, {"question_id", "risk_id", "question"}, {"answer", "status"})
        answer = obj.get("answer")
        if answer is not None:
            answer = _as_str(answer, f"{path}.answer")
        return cls(
            question_id=_as_str(obj["question_id"], f"{path}.question_id"),
            risk_id=_as_str(obj["risk_id"], f"{path}.risk_id"),
            question=_as_str(obj["question"], f"{path}.question"),
            answer=answer,
            status=_as_enum(ClarificationStatus, obj.get("status", "pending"), f"{path}.status"),
        )


# ---------------------------------------------------------------------------
# Modeler artifacts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QualityAttributePriority:
    attribute: QualityAttribute
    rank: int
    scenario: str

    def to_dict(self) -> JsonDict:
        return {"attribute": self.attribute.value, "rank": self.rank, "scenario": self.scenario}

    @classmethod
    def from_dict(cls, data: Any, path: str = "qa_priority") -> QualityAttributePriority:
        obj = _expect_object(data, path, {"attribute", "rank", "scenario"})
        return cls(
            attribute=_as_enum(QualityAttribute, obj["attribute"], f"{path}.attribute"),
            rank=_as_int(obj["rank"], f"{path}.rank"),
            scenario=_as_str(obj["scenario"], f"{path}.scenario"),
        )


@dataclass(frozen=True)
class ArchitecturalDecisionRecord:
    id: str
    category: AdrCategory
    title: str
    context: str
    decision: str
    alternatives: tuple[str, ...]
    consequences: str
    addresses: tuple[str, ...]
    grounding: tuple[str, ...] = ()

    def to_dict(self) -> JsonDict:
        return {
            "id": self.id,
            "category": self.category.value,
            "title": self.title,
            "context": self.context,
            "decision": self.decision,
            "alternatives": list(self.alternatives),
            "consequences": self.consequences,
            "addresses": list(self.addresses),
            "grounding": list(self.grounding),
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "adr") -> ArchitecturalDecisionRecord:
        obj = _expect_object(
            data,
            path,
            {"id", "category", "title", "context", "decision", "alternatives", "consequences", "addresses"},
            {"grounding"},
        )
        return cls(
            id=_as_str(obj["id"], f"{path}.id"),
            category=_as_enum(AdrCategory, obj["category"], f"{path}.category"),
            title=_as_str(obj["title"], f"{path}.title"),
            context=_as_str(obj["context"], f"{path}.context"),
            decision=_as_str(obj["decision"], f"{path}.decision"),
            alternatives=_as_str_tuple(obj["alternatives"], f"{path}.alternatives"),
            consequences=_as_str(obj["consequences"], f"{path}.consequences"),
            addresses=_as_str_tuple(obj["addresses"], f"{path}.addresses"),
            grounding=_as_str_tuple(obj.get("grounding", []), f"{path}.grounding"),
        )


@dataclass(frozen=True)
class Component:
    id: str
    name: str
    responsibility: str
    domain: str

    def to_dict(self) -> JsonDict:
        return {"id": self.id, "name": self.name, "responsibility": self.responsibility, "domain": self.domain}

    @classmethod
    def from_dict(cls, data: Any, path: str = "component") -> Component:
        obj = _expect_object(data, path, {"id", "name", "responsibility", "domain"})
        return cls(
            id=_as_str(obj["id"], f"{path}.id"),
            name=_as_str(obj["name"], f"{path}.name"),
            responsibility=_as_str(obj["responsibility"], f"{path}.responsibility"),
            domain=_as_str(obj["domain"], f"{path}.domain"),
        )


@dataclass(frozen=True)
class ComponentRelation:
    from_id: str
    to_id: str
    kind: ComponentRelationKind

    def to_dict(self) -> JsonDict:
        return {"from_id": self.from_id, "to_id": self.to_id, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, data: Any, path: str = "relation") -> ComponentRelation:
        obj = _expect_object(data, path, {"from_id", "to_id", "kind"})
        return cls(
            from_id=_as_str(obj["from_id"], f"{path}.from_id"),
            to_id=_as_str(obj["to_id"], f"{path}.to_id"),
            kind=_as_enum(ComponentRelationKind, obj["kind"], f"{path}.kind"),
        )


@dataclass(frozen=True)
class LogicalView:
    components: tuple[Component, ...] = ()
    relations: tuple[ComponentRelation, ...] = ()

    def to_dict(self) -> JsonDict:
        return {
            "components": [c.to_dict() for c in self.components],
            "relations": [r.to_dict() for r in self.relations],
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "logical_view") -> LogicalView:
        obj = _expect_object(data, path, {"components", "relations"})
        return cls(
            components=tuple(
                Component.from_dict(c, f"{path}.components[{i}]")
                for i, c in enumerate(_as_list(obj["components"], f"{path}.components"))
            ),
            relations=tuple(
                ComponentRelation.from_dict(r, f"{path}.relations[{i}]")
                for i, r in enumerate(_as_list(obj["relations"], f"{path}.relations"))
            ),
        )


@dataclass(frozen=True)
class PhysicalNode:
    id: str
    name: str
    kind: NodeKind

    def to_dict(self) -> JsonDict:
        return {"id": self.id, "name": self.name, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, data: Any, path: str = "node") -> PhysicalNode:
        obj = _expect_object(data, path, {"id", "name", "kind"})
        return cls(
            id=_as_str(obj["id"], f"{path}.id"),
            name=_as_str(obj["name"], f"{path}.name"),
            kind=_as_enum(NodeKind, obj["kind"], f"{path}.kind"),
        )


@dataclass(frozen=True)
class Allocation:
    component_id: str
    node_id: str

    def to_dict(self) -> JsonDict:
        return {"component_id": self.component_id, "node_id": self.node_id}

    @classmethod
    def from_dict(cls, data: Any, path: str = "allocation") -> Allocation:
        obj = _expect_object(data, path, {"component_id", "node_id"})
        return cls(
            component_id=_as_str(obj["component_id"], f"{path}.component_id"),
            node_id=_as_str(obj["node_id"], f"{path}.node_id"),
        )


@dataclass(frozen=True)
class NodeLink:
    node_a: str
    node_b: str
    protocol: str

    def to_dict(self) -> JsonDict:
        return {"node_a": self.node_a, "node_b": self.node_b, "protocol": self.protocol}

    @classmethod
    def from_dict(cls, data: Any, path: str = "link") -> NodeLink:
        obj = _expect_object(data, path, {"node_a", "node_b", "protocol"})
        return cls(
            node_a=_as_str(obj["node_a"], f"{path}.node_a"),
            node_b=_as_str(obj["node_b"], f"{path}.node_b"),
            protocol=_as_str(obj["protocol"], f"{path}.protocol"),
        )


@dataclass(frozen=True)
class PhysicalView:
    nodes: tuple[PhysicalNode, ...] = ()
    allocations: tuple[Allocation, ...] = ()
    links: tuple[NodeLink, ...] = ()

    def to_dict(self) -> JsonDict:
        return {
            "nodes": [n.to_dict() for n in self.nodes],
            "allocations": [a.to_dict() for a in self.allocations],
            "links": [l.to_dict() for l in self.links],
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "physical_view") -> PhysicalView:
        obj = _expect_object(data, path, {"nodes", "allocations", "links"})
        return cls(
            nodes=tuple(
                PhysicalNode.from_dict(n, f"{path}.nodes[{i}]")
                for i, n in enumerate(_as_list(obj["nodes"], f"{path}.nodes"))
            ),
            allocations=tuple(
                Allocation.from_dict(a, f"{path}.allocations[{i}]")
                for i, a in enumerate(_as_list(obj["allocations"], f"{path}.allocations"))
            ),
            links=tuple(
                NodeLink.from_dict(l, f"{path}.links[{i}]")
                for i, l in enumerate(_as_list(obj["links"], f"{path}.links"))
            ),
        )


# ---------------------------------------------------------------------------
# Designer diagram models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassAttribute:
    name: str
    type: str

    def to_dict(self) -> JsonDict:
        return {"name": self.name, "type": self.type}

    @classmethod
    def from_dict(cls, data: Any, path: str = "attribute") -> ClassAttribute:
        obj = _expect_object(data, path, {"name", "type"})
        return cls(name=_as_str(obj["name"], f"{path}.name"), type=_as_str(obj["type"], f"{path}.type"))


@dataclass(frozen=True)
class UmlClass:
    name: str
    attributes: tuple[ClassAttribute, ...] = ()
    methods: tuple[str, ...] = ()
    responsibility: str = ""

    def to_dict(self) -> JsonDict:
        return {
            "name": self.name,
            "attributes": [a.to_dict() for a in self.attributes],
            "methods": list(self.methods),
            "responsibility": self.responsibility,
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "class") -> UmlClass:
        obj = _expect_object(data, path, {"name"}, {"attributes", "methods", "responsibility"})
        return cls(
            name=_as_str(obj["name"], f"{path}.name"),
            attributes=tuple(
                ClassAttribute.from_dict(a, f"{path}.attributes[{i}]")
                for i, a in enumerate(_as_list(obj.get("attributes", []), f"{path}.attributes"))
            ),
            methods=_as_str_tuple(obj.get("methods", []), f"{path}.methods"),
            responsibility=_as_str(obj.get("responsibility", ""), f"{path}.responsibility", allow_empty=True),
        )


@dataclass(frozen=True)
class ClassRelation:
    from_name: str
    to_name: str
    kind: ClassRelationKind

    def to_dict(self) -> JsonDict:
        return {"from": self.from_name, "to": self.to_name, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, data: Any, path: str = "relation") -> ClassRelation:
        obj = _expect_object(data, path, {"from", "to", "kind"})
        return cls(
            from_name=_as_str(obj["from"], f"{path}.from"),
            to_name=_as_str(obj["to"], f"{path}.to"),
            kind=_as_enum(ClassRelationKind, obj["kind"], f"{path}.kind"),
        )


@dataclass(frozen=True)
class ClassModel:
    classes: tuple[UmlClass, ...] = ()
    relations: tuple[ClassRelation, ...] = ()

    def to_dict(self) -> JsonDict:
        return {
            "classes": [c.to_dict() for c in self.classes],
            "relations": [r.to_dict() for r in self.relations],
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "class_model") -> ClassModel:
        obj = _expect_object(data, path, {"classes", "relations"})
        return cls(
            classes=tuple(
                UmlClass.from_dict(c, f"{path}.classes[{i}]")
                for i, c in enumerate(_as_list(obj["classes"], f"{path}.classes"))
            ),
            relations=tuple(
                ClassRelation.from_dict(r, f"{path}.relations[{i}]")
                for i, r in enumerate(_as_list(obj["relations"], f"{path}.relations"))
            ),
        )


@dataclass(frozen=True)
class Participant:
    name: str
    kind: ParticipantKind

    def to_dict(self) -> JsonDict:
        return {"name": self.name, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, data: Any, path: str = "participant") -> Participant:
        obj = _expect_object(data, path, {"name", "kind"})
        return cls(
            name=_as_str(obj["name"], f"{path}.name"),
            kind=_as_enum(ParticipantKind, obj["kind"], f"{path}.kind"),
        )


@dataclass(frozen=True)
class Message:
    seq_index: int
    from_name: str
    to_name: str
    label: str
    style: MessageStyle

    def to_dict(self) -> JsonDict:
        return {
            "seq_index": self.seq_index,
            "from": self.from_name,
            "to": self.to_name,
            "label": self.label,
            "style": self.style.value,
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "message") -> Message:
        obj = _expect_object(data, path, {"seq_index", "from", "to", "label", "style"})
        return cls(
            seq_index=_as_int(obj["seq_index"], f"{path}.seq_index"),
            from_name=_as_str(obj["from"], f"{path}.from"),
            to_name=_as_str(obj["to"], f"{path}.to"),
            label=_as_str(obj["label"], f"{path}.label"),
            style=_as_enum(MessageStyle, obj["style"], f"{path}.style"),
        )


@dataclass(frozen=True)
class SequenceModel:
    participants: tuple[Participant, ...] = ()
    messages: tuple[Message, ...] = ()

    def to_dict(self) -> JsonDict:
        return {
            "participants": [p.to_dict() for p in self.participants],
            "messages": [m.to_dict() for m in self.messages],
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "sequence_model") -> SequenceModel:
        obj = _expect_object(data, path, {"participants", "messages"})
        return cls(
            participants=tuple(
                Participant.from_dict(p, f"{path}.participants[{i}]")
                for i, p in enumerate(_as_list(obj["participants"], f"{path}.participants"))
            ),
            messages=tuple(
                Message.from_dict(m, f"{path}.messages[{i}]")
                for i, m in enumerate(_as_list(obj["messages"], f"{path}.messages"))
            ),
        )


@dataclass(frozen=True)
class DeploymentArtifact:
    name: str
    realizes: str | None = None

    def to_dict(self) -> JsonDict:
        out: JsonDict = {"name": self.name}
        if self.realizes is not None:
            out["realizes"] = self.realizes
        return out

    @classmethod
    def from_dict(cls, data: Any, path: str = "artifact") -> DeploymentArtifact:
        obj = _expect_object(data, path, {"name"}, {"realizes"})
        realizes = obj.get("realizes")
        if realizes is not None:
            realizes = _as_str(realizes, f"{path}.realizes")
        return cls(name=_as_str(obj["name"], f"{path}.name"), realizes=realizes)


@dataclass(frozen=True)
class ArtifactPlacement:
    artifact: str
    node: str

    def to_dict(self) -> JsonDict:
        return {"artifact": self.artifact, "node": self.node}

    @classmethod
    def from_dict(cls, data: Any, path: str = "placement") -> ArtifactPlacement:
        obj = _expect_object(data, path, {"artifact", "node"})
        return cls(artifact=_as_str(obj["artifact"], f"{path}.artifact"), node=_as_str(obj["node"], f"{path}.node"))


@dataclass(frozen=True)
class DeploymentPath:
    node_a: str
    node_b: str
    label: str | None = None

    def to_dict(self) -> JsonDict:
        out: JsonDict = {"node_a": self.node_a, "node_b": self.node_b}
        if self.label is not None:
            out["label"] = self.label
        return out

    @classmethod
    def from_dict(cls, data: Any, path: str = "path") -> DeploymentPath:
        obj = _expect_object(data, path, {"node_a", "node_b"}, {"label"})
        label = obj.get("label")
        if label is not None:
            label = _as_str(label, f"{path}.label")
        return cls(
            node_a=_as_str(obj["node_a"], f"{path}.node_a"),
            node_b=_as_str(obj["node_b"], f"{path}.node_b"),
            label=label,
        )


@dataclass(frozen=True)
class DeploymentModel:
    nodes: tuple[str, ...] = ()
    artifacts: tuple[DeploymentArtifact, ...] = ()
    placements: tuple[ArtifactPlacement, ...] = ()
    paths: tuple[DeploymentPath, ...] = ()

    def to_dict(self) -> JsonDict:
        return {
            "nodes": list(self.nodes),
            "artifacts": [a.to_dict() for a in self.artifacts],
            "placements": [p.to_dict() for p in self.placements],
            "paths": [p.to_dict() for p in self.paths],
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "deployment_model") -> DeploymentModel:
        obj = _expect_object(data, path, {"nodes", "artifacts", "placements", "paths"})
        return cls(
            nodes=_as_str_tuple(obj["nodes"], f"{path}.nodes"),
            artifacts=tuple(
                DeploymentArtifact.from_dict(a, f"{path}.artifacts[{i}]")
                for i, a in enumerate(_as_list(obj["artifacts"], f"{path}.artifacts"))
            ),
            placements=tuple(
                ArtifactPlacement.from_dict(p, f"{path}.placements[{i}]")
                for i, p in enumerate(_as_list(obj["placements"], f"{path}.placements"))
            ),
            paths=tuple(
                DeploymentPath.from_dict(p, f"{path}.paths[{i}]")
                for i, p in enumerate(_as_list(obj["paths"], f"{path}.paths"))
            ),
        )


# ---------------------------------------------------------------------------
# Evaluator artifacts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MismatchReport:
    id: str
    kind: MismatchKind
    severity: int
    requirement_refs: tuple[str, ...]
    artifact_refs: tuple[str, ...]
    description: str

    def to_dict(self) -> JsonDict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "severity": self.severity,
            "requirement_refs": list(self.requirement_refs),
            "artifact_refs": list(self.artifact_refs),
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "mismatch") -> MismatchReport:
        obj = _expect_object(data, path, {"id", "kind", "severity", "requirement_refs", "artifact_refs", "description"})
        return cls(
            id=_as_str(obj["id"], f"{path}.id"),
            kind=_as_enum(MismatchKind, obj["kind"], f"{path}.kind"),
            severity=_as_int(obj["severity"], f"{path}.severity"),
            requirement_refs=_as_str_tuple(obj["requirement_refs"], f"{path}.requirement_refs"),
            artifact_refs=_as_str_tuple(obj["artifact_refs"], f"{path}.artifact_refs"),
            description=_as_str(obj["description"], f"{path}.description"),
        )


@dataclass(frozen=True)
class RootCause:
    mismatch_id: str
    stage: Stage
    explanation: str

    def to_dict(self) -> JsonDict:
        return {"mismatch_id": self.mismatch_id, "stage": self.stage.value, "explanation": self.explanation}

    @classmethod
    def from_dict(cls, data: Any, path: str = "root_cause") -> RootCause:
        obj = _expect_object(data, path, {"mismatch_id", "stage", "explanation"})
        return cls(
            mismatch_id=_as_str(obj["mismatch_id"], f"{path}.mismatch_id"),
            stage=_as_enum(Stage, obj["stage"], f"{path}.stage"),
            explanation=_as_str(obj["explanation"], f"{path}.explanation"),
        )


@dataclass(frozen=True)
class RefinementSuggestion:
    mismatch_id: str
    target_stage: Stage
    directive: str

    def to_dict(self) -> JsonDict:
        return {"mismatch_id": self.mismatch_id, "target_stage": self.target_stage.value, "directive": self.directive}

    @classmethod
    def from_dict(cls, data: Any, path: str = "suggestion") -> RefinementSuggestion:
        obj = _expect_object(data, path, {"mismatch_id", "target_stage", "directive"})
        return cls(
            mismatch_id=_as_str(obj["mismatch_id"], f"{path}.mismatch_id"),
            target_stage=_as_enum(Stage, obj["target_stage"], f"{path}.target_stage"),
            directive=_as_str(obj["directive"], f"{path}.directive"),
        )


# ---------------------------------------------------------------------------
# Package
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceabilityLink:
    requirement_id: str
    element_path: str

    def to_dict(self) -> JsonDict:
        return {"requirement_id": self.requirement_id, "element_path": self.element_path}

    @classmethod
    def from_dict(cls, data: Any, path: str = "traceability_link") -> TraceabilityLink:
        obj = _expect_object(data, path, {"requirement_id", "element_path"})
        return cls(
            requirement_id=_as_str(obj["requirement_id"], f"{path}.requirement_id"),
            element_path=_as_str(obj["element_path"], f"{path}.element_path"),
        )


@dataclass(frozen=True)
class DesignPackage:
    requirement_set: tuple[Requirement, ...] = ()
    asr_tags: tuple[AsrTag, ...] = ()
    risk_flags: tuple[RiskFlag, ...] = ()
    clarifications: tuple[ClarificationExchange, ...] = ()
    qa_priorities: tuple[QualityAttributePriority, ...] = ()
    adrs: tuple[ArchitecturalDecisionRecord, ...] = ()
    logical_view: LogicalView = field(default_factory=LogicalView)
    physical_view: PhysicalView = field(default_factory=PhysicalView)
    class_model: ClassModel = field(default_factory=ClassModel)
    sequence_models: tuple[SequenceModel, ...] = ()
    deployment_model: DeploymentModel = field(default_factory=DeploymentModel)
    traceability_links: tuple[TraceabilityLink, ...] = ()
    verdict: PackageVerdict = PackageVerdict.UNCONFIRMED
    round_count: int = 0

    def to_dict(self) -> JsonDict:
        return {
            "requirement_set": [r.to_dict() for r in self.requirement_set],
            "asr_tags": [t.to_dict() for t in self.asr_tags],
            "risk_flags": [r.to_dict() for r in self.risk_flags],
            "clarifications": [c.to_dict() for c in self.clarifications],
            "qa_priorities": [q.to_dict() for q in self.qa_priorities],
            "adrs": [a.to_dict() for a in self.adrs],
            "logical_view": self.logical_view.to_dict(),
            "physical_view": self.physical_view.to_dict(),
            "class_model": self.class_model.to_dict(),
            "sequence_models": [s.to_dict() for s in self.sequence_models],
            "deployment_model": self.deployment_model.to_dict(),
            "traceability_links": [t.to_dict() for t in self.traceability_links],
            "verdict": self.verdict.value,
            "round_count": self.round_count,
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "package") -> DesignPackage:
        obj = _expect_object(
            data,
            path,
            {
                "requirement_set",
                "asr_tags",
                "risk_flags",
                "clarifications",
                "qa_priorities",
                "adrs",
                "logical_view",
                "physical_view",
                "class_model",
                "sequence_models",
                "deployment_model",
                "traceability_links",
                "verdict",
                "round_count",
            },
        )
        return cls(
            requirement_set=tuple(
                Requirement.from_dict(r, f"{path}.requirement_set[{i}]")
                for i, r in enumerate(_as_list(obj["requirement_set"], f"{path}.requirement_set"))
            ),
            asr_tags=tuple(
                AsrTag.from_dict(t, f"{path}.asr_tags[{i}]")
                for i, t in enumerate(_as_list(obj["asr_tags"], f"{path}.asr_tags"))
            ),
            risk_flags=tuple(
                RiskFlag.from_dict(r, f"{path}.risk_flags[{i}]")
                for i, r in enumerate(_as_list(obj["risk_flags"], f"{path}.risk_flags"))
            ),
            clarifications=tuple(
                ClarificationExchange.from_dict(c, f"{path}.clarifications[{i}]")
                for i, c in enumerate(_as_list(obj["clarifications"], f"{path}.clarifications"))
            ),
            qa_priorities=tuple(
                QualityAttributePriority.from_dict(q, f"{path}.qa_priorities[{i}]")
                for i, q in enumerate(_as_list(obj["qa_priorities"], f"{path}.qa_priorities"))
            ),
            adrs=tuple(
                ArchitecturalDecisionRecord.from_dict(a, f"{path}.adrs[{i}]")
                for i, a in enumerate(_as_list(obj["adrs"], f"{path}.adrs"))
            ),
            logical_view=LogicalView.from_dict(obj["logical_view"], f"{path}.logical_view"),
            physical_view=PhysicalView.from_dict(obj["physical_view"], f"{path}.physical_view"),
            class_model=ClassModel.from_dict(obj["class_model"], f"{path}.class_model"),
            sequence_models=tuple(
                SequenceModel.from_dict(s, f"{path}.sequence_models[{i}]")
                for i, s in enumerate(_as_list(obj["sequence_models"], f"{path}.sequence_models"))
            ),
            deployment_model=DeploymentModel.from_dict(obj["deployment_model"], f"{path}.deployment_model"),
            traceability_links=tuple(
                TraceabilityLink.from_dict(t, f"{path}.traceability_links[{i}]")
                for i, t in enumerate(_as_list(obj["traceability_links"], f"{path}.traceability_links"))
            ),
            verdict=_as_enum(PackageVerdict, obj["verdict"], f"{path}.verdict"),
            round_count=_as_int(obj["round_count"], f"{path}.round_count"),
        )


def parse_package(raw: str | bytes) -> DesignPackage:
    """Parse a UTF-8 JSON package document; raises ValueError on schema breaks."""
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    data = json.loads(raw)
    return DesignPackage.from_dict(data)


# ---------------------------------------------------------------------------
# Integrity validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegrityViolation:
    kind: ViolationKind
    path: str
    message: str

    def to_dict(self) -> JsonDict:
        return {"kind": self.kind.value, "path": self.path, "message": self.message}


def validate_package(pkg: DesignPackage, *, srs_length: int | None = None) -> list[IntegrityViolation]:
    """Walk every cross-reference and type invariant; one violation per break.

    Returns violations in document order (the order package fields are declared,
    list entries in list order); an empty result means the package is internally
    consistent. Allocation *completeness* and cross-diagram name correspondence
    are deliberately not checked here: they are the evaluator's mismatch checks,
    not integrity violations, so a valid package can still evaluate as mismatched.
    """
    out: list[IntegrityViolation] = []

    def dangling(path: str, message: str) -> None:
        out.append(IntegrityViolation(ViolationKind.DANGLING_REFERENCE, path, message))

    def duplicate(path: str, message: str) -> None:
        out.append(IntegrityViolation(ViolationKind.DUPLICATE_ID, path, message))

    def invalid(path: str, message: str) -> None:
        out.append(IntegrityViolation(ViolationKind.INVALID_FIELD, path, message))

    req_ids: set[str] = set()
    for i, req in enumerate(pkg.requirement_set):
        if req.id in req_ids:
            duplicate(f"requirement_set[{i}].id", f"duplicate requirement id {req.id!r}")
        req_ids.add(req.id)
        start, end = req.source_span
        if start < 0 or end < start:
            invalid(f"requirement_set[{i}].source_span", f"invalid span ({start}, {end})")
        elif srs_length is not None and end > srs_length:
            invalid(f"requirement_set[{i}].source_span", f"span end {end} exceeds SRS length {srs_length}")
        if req.kind is RequirementKind.FUNCTIONAL and req.attributes:
            invalid(f"requirement_set[{i}].attributes", "functional requirements must not carry quality attributes")

    for i, tag in enumerate(pkg.asr_tags):
        if tag.requirement_id not in req_ids:
            dangling(f"asr_tags[{i}].requirement_id", f"unknown requirement {tag.requirement_id!r}")
        if not 1 <= tag.criticality <= 4:
            invalid(f"asr_tags[{i}].criticality", f"criticality {tag.criticality} outside [1, 4]")

    risk_ids: set[str] = set()
    for i, risk in enumerate(pkg.risk_flags):
        if risk.id in risk_ids:
            duplicate(f"risk_flags[{i}].id", f"duplicate risk id {risk.id!r}")
        risk_ids.add(risk.id)
        if not risk.affected_requirement_ids:
            invalid(f"risk_flags[{i}].affected_requirement_ids", "must name at least one requirement")
        for j, rid in enumerate(risk.affected_requirement_ids):
            if rid not in req_ids:
                dangling(f"risk_flags[{i}].affected_requirement_ids[{j}]", f"unknown requirement {rid!r}")
        if risk.resolution is RiskResolution.ASSUMED and not (risk.assumption or "").strip():
            invalid(f"risk_flags[{i}].assumption", "resolution=assumed requires assumption text")

    question_ids: set[str] = set()
    for i, exch in enumerate(pkg.clarifications):
        if exch.question_id in question_ids:
            duplicate(f"clarifications[{i}].question_id", f"duplicate question id {exch.question_id!r}")
        question_ids.add(exch.question_id)
        if exch.risk_id not in risk_ids:
            dangling(f"clarifications[{i}].risk_id", f"unknown risk {exch.risk_id!r}")
        answered = exch.status is ClarificationStatus.ANSWERED
        if answered != (exch.answer is not None):
            invalid(f"clarifications[{i}].status", "status must be answered iff an answer is present")

    ranks = [q.rank for q in pkg.qa_priorities]
    for i, qa in enumerate(pkg.qa_priorities):
        if qa.rank < 1:
            invalid(f"qa_priorities[{i}].rank", f"rank {qa.rank} must be >= 1")
    if ranks and sorted(ranks) != list(range(1, len(ranks) + 1)):
        invalid("qa_priorities", f"ranks {sorted(ranks)} must form the permutation 1..{len(ranks)}")

    adr_ids: set[str] = set()
    for i, adr in enumerate(pkg.adrs):
        if adr.id in adr_ids:
            duplicate(f"adrs[{i}].id", f"duplicate ADR id {adr.id!r}")
        adr_ids.add(adr.id)
        if not adr.addresses:
            invalid(f"adrs[{i}].addresses", "must address at least one requirement")
        for j, rid in enumerate(adr.addresses):
            if rid not in req_ids:
                dangling(f"adrs[{i}].addresses[{j}]", f"unknown requirement {rid!r}")

    comp_ids: set[str] = set()
    for i, comp in enumerate(pkg.logical_view.components):
        if comp.id in comp_ids:
            duplicate(f"logical_view.components[{i}].id", f"duplicate component id {comp.id!r}")
        comp_ids.add(comp.id)
    for i, rel in enumerate(pkg.logical_view.relations):
        if rel.from_id not in comp_ids:
            dangling(f"logical_view.relations[{i}].from_id", f"unknown component {rel.from_id!r}")
        if rel.to_id not in comp_ids:
            dangling(f"logical_view.relations[{i}].to_id", f"unknown component {rel.to_id!r}")
        if rel.kind is ComponentRelationKind.CONTAINS and rel.from_id == rel.to_id:
            invalid(f"logical_view.relations[{i}]", f"component {rel.from_id!r} cannot contain itself")

    node_ids: set[str] = set()
    for i, node in enumerate(pkg.physical_view.nodes):
        if node.id in node_ids:
            duplicate(f"physical_view.nodes[{i}].id", f"duplicate node id {node.id!r}")
        node_ids.add(node.id)
    for i, alloc in enumerate(pkg.physical_view.allocations):
        if alloc.component_id not in comp_ids:
            dangling(f"physical_view.allocations[{i}].component_id", f"unknown component {alloc.component_id!r}")
        if alloc.node_id not in node_ids:
            dangling(f"physical_view.allocations[{i}].node_id", f"unknown node {alloc.node_id!r}")
    for i, link in enumerate(pkg.physical_view.links):
        if link.node_a not in node_ids:
            dangling(f"physical_view.links[{i}].node_a", f"unknown node {link.node_a!r}")
        if link.node_b not in node_ids:
            dangling(f"physical_view.links[{i}].node_b", f"unknown node {link.node_b!r}")

    # Class relation endpoints may reference undeclared (external) types, so only
    # the name-uniqueness invariant applies here.
    class_names: set[str] = set()
    for i, cls_ in enumerate(pkg.class_model.classes):
        if cls_.name in class_names:
            duplicate(f"class_model.classes[{i}].name", f"duplicate class name {cls_.name!r}")
        class_names.add(cls_.name)

    if pkg.verdict is PackageVerdict.CONFIRMED and not pkg.sequence_models:
        invalid("sequence_models", "a confirmed package requires at least one sequence model")
    for i, seq in enumerate(pkg.sequence_models):
        part_names: set[str] = set()
        for j, part in enumerate(seq.participants):
            if part.name in part_names:
                duplicate(f"sequence_models[{i}].participants[{j}].name", f"duplicate participant {part.name!r}")
            part_names.add(part.name)
        expected = 1
        for j, msg in enumerate(seq.messages):
            if msg.seq_index != expected:
                invalid(
                    f"sequence_models[{i}].messages[{j}].seq_index",
                    f"expected seq_index {expected}, got {msg.seq_index}",
                )
            expected = msg.seq_index + 1
            if msg.from_name not in part_names:
                dangling(f"sequence_models[{i}].messages[{j}].from", f"unknown participant {msg.from_name!r}")
            if msg.to_name not in part_names:
                dangling(f"sequence_models[{i}].messages[{j}].to", f"unknown participant {msg.to_name!r}")

    deploy_names: set[str] = set()
    for i, name in enumerate(pkg.deployment_model.nodes):
        if name in deploy_names:
            duplicate(f"deployment_model.nodes[{i}]", f"duplicate deployment name {name!r}")
        deploy_names.add(name)
    artifact_names: set[str] = set()
    for i, art in enumerate(pkg.deployment_model.artifacts):
        if art.name in deploy_names or art.name in artifact_names:
            duplicate(f"deployment_model.artifacts[{i}].name", f"duplicate deployment name {art.name!r}")
        artifact_names.add(art.name)
    placed: dict[str, int] = {}
    node_set = set(pkg.deployment_model.nodes)
    for i, pl in enumerate(pkg.deployment_model.placements):
        if pl.artifact not in artifact_names:
            dangling(f"deployment_model.placements[{i}].artifact", f"unknown artifact {pl.artifact!r}")
        if pl.node not in node_set:
            dangling(f"deployment_model.placements[{i}].node", f"unknown node {pl.node!r}")
        placed[pl.artifact] = placed.get(pl.artifact, 0) + 1
        if placed[pl.artifact] > 1:
            invalid(f"deployment_model.placements[{i}]", f"artifact {pl.artifact!r} placed more than once")
    for i, art in enumerate(pkg.deployment_model.artifacts):
        if placed.get(art.name, 0) == 0:
            invalid(f"deployment_model.artifacts[{i}]", f"artifact {art.name!r} has no placement")
    for i, path_ in enumerate(pkg.deployment_model.paths):
        if path_.node_a not in node_set:
            dangling(f"deployment_model.paths[{i}].node_a", f"unknown node {path_.node_a!r}")
        if path_.node_b not in node_set:
            dangling(f"deployment_model.paths[{i}].node_b", f"unknown node {path_.node_b!r}")

    for i, link in enumerate(pkg.traceability_links):
        if link.requirement_id not in req_ids:
            dangling(f"traceability_links[{i}].requirement_id", f"unknown requirement {link.requirement_id!r}")
        if not element_path_exists(pkg, link.element_path):
            dangling(f"traceability_links[{i}].element_path", f"unresolved element path {link.element_path!r}")

    if pkg.round_count < 0:
        invalid("round_count", f"round_count {pkg.round_count} must be >= 0")

    return out


def element_path_exists(pkg: DesignPackage, path: str) -> bool:
    """Resolve a slash-delimited element path against the package."""
    parts = path.split("/")
    if not parts or not all(parts):
        return False
    root, rest = parts[0], parts[1:]
    if root == "adrs":
        return len(rest) == 1 and any(a.id == rest[0] for a in pkg.adrs)
    if root == "qa_priorities":
        return len(rest) == 1 and any(q.attribute.value == rest[0] for q in pkg.qa_priorities)
    if root == "logical_view":
        if len(rest) == 2 and rest[0] == "components":
            return any(c.id == rest[1] for c in pkg.logical_view.components)
        if len(rest) == 2 and rest[0] == "relations":
            return _index_in(rest[1], len(pkg.logical_view.relations))
        return False
    if root == "physical_view":
        if len(rest) == 2 and rest[0] == "nodes":
            return any(n.id == rest[1] for n in pkg.physical_view.nodes)
        if len(rest) == 2 and rest[0] == "links":
            return _index_in(rest[1], len(pkg.physical_view.links))
        return False
    if root == "class_model":
        if len(rest) == 2 and rest[0] == "classes":
            return any(c.name == rest[1] for c in pkg.class_model.classes)
        if len(rest) == 2 and rest[0] == "relations":
            return _index_in(rest[1], len(pkg.class_model.relations))
        return False
    if root == "sequence_models":
        if not rest or not _index_in(rest[0], len(pkg.sequence_models)):
            return False
        if len(rest) == 1:
            return True
        seq = pkg.sequence_models[int(rest[0])]
        if len(rest) == 3 and rest[1] == "participants":
            return any(p.name == rest[2] for p in seq.participants)
        if len(rest) == 3 and rest[1] == "messages":
            return any(str(m.seq_index) == rest[2] for m in seq.messages)
        return False
    if root == "deployment_model":
        if len(rest) == 2 and rest[0] == "nodes":
            return rest[1] in pkg.deployment_model.nodes
        if len(rest) == 2 and rest[0] == "artifacts":
            return any(a.name == rest[1] for a in pkg.deployment_model.artifacts)
        if len(rest) == 2 and rest[0] == "paths":
            return _index_in(rest[1], len(pkg.deployment_model.paths))
        return False
    return False


def _index_in(token: str, length: int) -> bool:
    return token.isdigit() and int(token) < length


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def canonical_package_dict(pkg: DesignPackage) -> JsonDict:
    """Package dict with every order-insensitive list put into canonical order.

    Diagram-model lists keep declaration order (it is semantic: emit_diagram
    renders in declaration order), except deployment artifacts/placements which
    are normalized to placement-grouped order, the only order the DSL can express.
    """
    data = pkg.to_dict()
    data["requirement_set"] = sorted(data["requirement_set"], key=lambda r: r["id"])
    data["asr_tags"] = sorted(data["asr_tags"], key=lambda t: t["requirement_id"])
    data["risk_flags"] = sorted(data["risk_flags"], key=lambda r: r["id"])
    data["clarifications"] = sorted(data["clarifications"], key=lambda c: c["question_id"])
    data["qa_priorities"] = sorted(data["qa_priorities"], key=lambda q: q["rank"])
    data["adrs"] = sorted(data["adrs"], key=lambda a: a["id"])
    data["logical_view"]["components"] = sorted(data["logical_view"]["components"], key=lambda c: c["id"])
    data["logical_view"]["relations"] = sorted(
        data["logical_view"]["relations"], key=lambda r: (r["from_id"], r["to_id"], r["kind"])
    )
    data["physical_view"]["nodes"] = sorted(data["physical_view"]["nodes"], key=lambda n: n["id"])
    data["physical_view"]["allocations"] = sorted(
        data["physical_view"]["allocations"], key=lambda a: (a["component_id"], a["node_id"])
    )
    data["physical_view"]["links"] = sorted(
        data["physical_view"]["links"], key=lambda l: (l["node_a"], l["node_b"], l["protocol"])
    )
    grouped = _grouped_deployment(pkg.deployment_model)
    data["deployment_model"]["artifacts"] = [a.to_dict() for a in grouped.artifacts]
    data["deployment_model"]["placements"] = [p.to_dict() for p in grouped.placements]
    data["traceability_links"] = sorted(
        data["traceability_links"], key=lambda t: (t["requirement_id"], t["element_path"])
    )
    return data


def _grouped_deployment(model: DeploymentModel) -> DeploymentModel:
    """Reorder artifacts/placements by hosting node (node order, then declaration)."""
    placement_of = {p.artifact: p.node for p in model.placements}
    artifacts: list[DeploymentArtifact] = []
    placements: list[ArtifactPlacement] = []
    for node in model.nodes:
        for art in model.artifacts:
            if placement_of.get(art.name) == node:
                artifacts.append(art)
                placements.append(ArtifactPlacement(art.name, node))
    # Unplaced or dangling-placement artifacts keep declaration order at the tail.
    for art in model.artifacts:
        if art not in artifacts:
            artifacts.append(art)
    for p in model.placements:
        if p.node not in model.nodes:
            placements.append(p)
    return DeploymentModel(model.nodes, tuple(artifacts), tuple(placements), model.paths)


def canonicalize(pkg: DesignPackage, *, srs_length: int | None = None) -> bytes:
    """Deterministic byte form of a valid package; raises InvalidPackage otherwise."""
    violations = validate_package(pkg, srs_length=srs_length)
    if violations:
        first = violations[0]
        raise InvalidPackage(
            f"package has {len(violations)} integrity violation(s); first: {first.path}: {first.message}",
            violations=[v.to_dict() for v in violations],
        )
    return canonical_json(canonical_package_dict(pkg)).encode("utf-8")


def package_digest(pkg: DesignPackage) -> str:
    """SHA-256 hex digest of the canonical byte form."""
    return hashlib.sha256(canonicalize(pkg)).hexdigest()


def requirement_kinds(pkg: DesignPackage) -> dict[str, RequirementKind]:
    return {r.id: r.kind for r in pkg.requirement_set}


def replace_package(pkg: DesignPackage, **changes: Any) -> DesignPackage:
    return replace(pkg, **changes)


def pending_clarifications(pkg: DesignPackage) -> tuple[ClarificationExchange, ...]:
    return tuple(c for c in pkg.clarifications if c.status is ClarificationStatus.PENDING)
