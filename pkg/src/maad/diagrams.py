"""Parser and emitter for the constrained PlantUML dialect used by the Designer.

Exactly three diagram kinds are supported. The emitter is byte-deterministic
(declaration order, two-space indentation, fixed tokens) and the parser accepts
exactly the emitted layout: one grammar, one truth. Unknown directives are
rejected, never skipped; the first violation raises with line and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from maad.artifacts import (
    ArtifactPlacement,
    ClassAttribute,
    ClassModel,
    ClassRelation,
    ClassRelationKind,
    DeploymentArtifact,
    DeploymentModel,
    DeploymentPath,
    Message,
    MessageStyle,
    Participant,
    ParticipantKind,
    SequenceModel,
    UmlClass,
)
from maad.common import MaadError

__all__ = [
    "DanglingEndpoint",
    "DiagramError",
    "DiagramKind",
    "DiagramText",
    "DuplicateName",
    "ParseError",
    "emit_diagram",
    "parse_diagram",
]


class DiagramKind(str, Enum):
    CLASS = "class"
    SEQUENCE = "sequence"
    DEPLOYMENT = "deployment"


@dataclass(frozen=True)
class DiagramText:
    kind: DiagramKind
    text: str


class DiagramError(MaadError):
    """Base for diagram parse failures; always carries a 1-based line number."""

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(message, line_number=line_number)
        self.line_number = line_number


class ParseError(DiagramError):
    code = "ParseError"

    def __init__(self, line_number: int, column: int, expected: str, found: str) -> None:
        super().__init__(f"line {line_number}, column {column}: expected {expected}, found {found!r}", line_number)
        self.column = column
        self.expected = expected
        self.found = found


class DuplicateName(DiagramError):
    code = "DuplicateName"

    def __init__(self, name: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: duplicate name {name!r}", line_number)
        self.name = name


class DanglingEndpoint(DiagramError):
    code = "DanglingEndpoint"

    def __init__(self, name: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: undeclared endpoint {name!r}", line_number)
        self.name = name


# Fixed token maps; the smallest unambiguous PlantUML-compatible subset.
CLASS_REL_TOKENS: dict[ClassRelationKind, str] = {
    ClassRelationKind.INHERITS: "--|>",
    ClassRelationKind.DEPENDS: "..>",
    ClassRelationKind.AGGREGATES: "o--",
    ClassRelationKind.COMPOSES: "*--",
}
MSG_TOKENS: dict[MessageStyle, str] = {
    MessageStyle.SYNC: "->",
    MessageStyle.ASYNC: "->>",
    MessageStyle.REPLY: "-->",
}
_CLASS_REL_BY_TOKEN = {v: k for k, v in CLASS_REL_TOKENS.items()}
_MSG_BY_TOKEN = {v: k for k, v in MSG_TOKENS.items()}

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_METHOD_RE = re.compile(
    r"(?P<name>[A-Za-z_]\w*)\((?P<params>(?:[A-Za-z_]\w*: [A-Za-z_]\w*(?:, [A-Za-z_]\w*: [A-Za-z_]\w*)*)?)\)"
    r"(?:: (?P<ret>[A-Za-z_]\w*))?$"
)


# ---------------------------------------------------------------------------
# Emit
# ---------------------------------------------------------------------------


def emit_diagram(model: ClassModel | SequenceModel | DeploymentModel) -> DiagramText:
    """Render a diagram model to its canonical DSL text (no trailing newline)."""
    if isinstance(model, ClassModel):
        return DiagramText(DiagramKind.CLASS, _emit_class(model))
    if isinstance(model, SequenceModel):
        return DiagramText(DiagramKind.SEQUENCE, _emit_sequence(model))
    if isinstance(model, DeploymentModel):
        return DiagramText(DiagramKind.DEPLOYMENT, _emit_deployment(model))
    raise TypeError(f"not a diagram model: {type(model).__name__}")


def _emit_class(model: ClassModel) -> str:
    lines = ["@startuml"]
    for cls in model.classes:
        members = [f"  +{a.name}: {a.type}" for a in cls.attributes] + [f"  +{m}" for m in cls.methods]
        if members:
            lines.append(f"class {cls.name} {{")
            lines.extend(members)
            lines.append("}")
        else:
            lines.append(f"class {cls.name}")
    for rel in model.relations:
        lines.append(f"{rel.from_name} {CLASS_REL_TOKENS[rel.kind]} {rel.to_name}")
    lines.append("@enduml")
    return "\n".join(lines)


def _emit_sequence(model: SequenceModel) -> str:
    lines = ["@startuml"]
    for part in model.participants:
        keyword = "actor" if part.kind is ParticipantKind.ACTOR else "participant"
        lines.append(f"{keyword} {part.name}")
    for msg in model.messages:
        lines.append(f"{msg.from_name} {MSG_TOKENS[msg.style]} {msg.to_name} : {msg.label}")
    lines.append("@enduml")
    return "\n".join(lines)


def _emit_deployment(model: DeploymentModel) -> str:
    placement_of = {p.artifact: p.node for p in model.placements}
    lines = ["@startuml"]
    for node in model.nodes:
        lines.append(f"node {node} {{")
        for art in model.artifacts:
            if placement_of.get(art.name) == node:
                lines.append(f"  artifact {art.name}")
        lines.append("}")
    for path in model.paths:
        if path.label is None:
            lines.append(f"{path.node_a} -- {path.node_b}")
        else:
            lines.append(f"{path.node_a} -- {path.node_b} : {path.label}")
    lines.append("@enduml")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Parse
# ---------------------------------------------------------------------------


class _Scanner:
    """Single-line cursor producing precise expected/found diagnostics."""

    def __init__(self, line: str, line_number: int) -> None:
        self.line = line
        self.line_number = line_number
        self.pos = 0

    def error(self, expected: str) -> ParseError:
        rest = self.line[self.pos :]
        stripped = rest.lstrip()
        if not rest:
            found = "end of line"
        elif not stripped:
            found = "whitespace"
        else:
            found = stripped.split(" ", 1)[0]
        return ParseError(self.line_number, self.pos + 1, expected, found)

    def literal(self, token: str, expected: str | None = None) -> None:
        if not self.line.startswith(token, self.pos):
            raise self.error(expected or f"{token!r}")
        self.pos += len(token)

    def try_literal(self, token: str) -> bool:
        if self.line.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def name(self, expected: str = "identifier") -> str:
        match = _NAME_RE.match(self.line, self.pos)
        if not match:
            raise self.error(expected)
        self.pos = match.end()
        return match.group()

    def label(self) -> str:
        rest = self.line[self.pos :]
        if not rest or rest != rest.strip():
            raise self.error("label text")
        self.pos = len(self.line)
        return rest

    def one_of(self, tokens: list[str], expected: str) -> str:
        # Longest token first so "-->" is not read as "--" etc.
        for token in sorted(tokens, key=len, reverse=True):
            if self.line.startswith(token, self.pos):
                self.pos += len(token)
                return token
        raise self.error(expected)

    def end(self) -> None:
        if self.pos != len(self.line):
            raise self.error("end of line")


def parse_diagram(kind: DiagramKind | str, text: str | DiagramText) -> ClassModel | SequenceModel | DeploymentModel:
    """Parse DSL text into a model; fails with the first grammar violation."""
    kind = DiagramKind(kind)
    if isinstance(text, DiagramText):
        text = text.text
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # tolerate exactly one trailing newline, e.g. a POSIX file
    if not lines or lines[0] != "@startuml":
        raise ParseError(1, 1, '"@startuml"', lines[0] if lines else "end of input")
    if len(lines) < 2 or lines[-1] != "@enduml":
        raise ParseError(len(lines), 1, '"@enduml"', lines[-1] if len(lines) > 1 else "end of input")
    body = lines[1:-1]
    if kind is DiagramKind.CLASS:
        return _parse_class(body)
    if kind is DiagramKind.SEQUENCE:
        return _parse_sequence(body)
    return _parse_deployment(body)


def _parse_class(body: list[str]) -> ClassModel:
    classes: list[UmlClass] = []
    relations: list[ClassRelation] = []
    names: set[str] = set()
    i = 0
    while i < len(body):
        line_no = i + 2  # body starts after @startuml
        sc = _Scanner(body[i], line_no)
        if sc.try_literal("class "):
            name = sc.name("class name")
            if name in names:
                raise DuplicateName(name, line_no)
            names.add(name)
            attributes: list[ClassAttribute] = []
            methods: list[str] = []
            if sc.try_literal(" {"):
                sc.end()
                i += 1
                closed = False
                while i < len(body):
                    line_no = i + 2
                    member_line = body[i]
                    if member_line == "}":
                        closed = True
                        break
                    msc = _Scanner(member_line, line_no)
                    msc.literal("  +", 'member line ("  +") or "}"')
                    attr_or_method = member_line[3:]
                    method_match = _METHOD_RE.match(attr_or_method)
                    if method_match:
                        methods.append(attr_or_method)
                        i += 1
                        continue
                    mname = msc.name("member name")
                    msc.literal(": ", '": " or "("')
                    mtype = msc.name("type name")
                    msc.end()
                    attributes.append(ClassAttribute(mname, mtype))
                    i += 1
                if not closed:
                    raise ParseError(len(body) + 2, 1, '"}"', "@enduml")
            else:
                sc.end()
            classes.append(UmlClass(name, tuple(attributes), tuple(methods)))
        else:
            frm = sc.name("class declaration or relation")
            sc.literal(" ", "relation token")
            token = sc.one_of(list(_CLASS_REL_BY_TOKEN), "relation token (--|>, ..>, o--, *--)")
            sc.literal(" ", "identifier")
            to = sc.name("identifier")
            sc.end()
            relations.append(ClassRelation(frm, to, _CLASS_REL_BY_TOKEN[token]))
        i += 1
    return ClassModel(tuple(classes), tuple(relations))


def _parse_sequence(body: list[str]) -> SequenceModel:
    participants: list[Participant] = []
    messages: list[Message] = []
    declared: set[str] = set()
    in_messages = False
    for i, line in enumerate(body):
        line_no = i + 2
        sc = _Scanner(line, line_no)
        if sc.try_literal("actor ") or sc.try_literal("participant "):
            if in_messages:
                raise ParseError(line_no, 1, "message line (declarations must precede messages)", line.split(" ")[0])
            kind = ParticipantKind.ACTOR if line.startswith("actor ") else ParticipantKind.OBJECT
            name = sc.name("participant name")
            sc.end()
            if name in declared:
                raise DuplicateName(name, line_no)
            declared.add(name)
            participants.append(Participant(name, kind))
            continue
        in_messages = True
        frm = sc.name("participant declaration or message")
        sc.literal(" ", "message token")
        token = sc.one_of(list(_MSG_BY_TOKEN), "message token (->, ->>, -->)")
        sc.literal(" ", "identifier")
        to = sc.name("identifier")
        sc.literal(" : ", '" : "')
        label = sc.label()
        if frm not in declared:
            raise DanglingEndpoint(frm, line_no)
        if to not in declared:
            raise DanglingEndpoint(to, line_no)
        messages.append(Message(len(messages) + 1, frm, to, label, _MSG_BY_TOKEN[token]))
    return SequenceModel(tuple(participants), tuple(messages))


def _parse_deployment(body: list[str]) -> DeploymentModel:
    nodes: list[str] = []
    artifacts: list[DeploymentArtifact] = []
    placements: list[ArtifactPlacement] = []
    paths: list[tuple[DeploymentPath, int]] = []
    names: set[str] = set()
    i = 0
    while i < len(body):
        line_no = i + 2
        sc = _Scanner(body[i], line_no)
        if sc.try_literal("node "):
            node = sc.name("node name")
            sc.literal(" {", '" {"')
            sc.end()
            if node in names:
                raise DuplicateName(node, line_no)
            names.add(node)
            nodes.append(node)
            i += 1
            closed = False
            while i < len(body):
                line_no = i + 2
                if body[i] == "}":
                    closed = True
                    break
                asc = _Scanner(body[i], line_no)
                asc.literal("  artifact ", 'artifact line ("  artifact") or "}"')
                art = asc.name("artifact name")
                asc.end()
                if art in names:
                    raise DuplicateName(art, line_no)
                names.add(art)
                artifacts.append(DeploymentArtifact(art))
                placements.append(ArtifactPlacement(art, node))
                i += 1
            if not closed:
                raise ParseError(len(body) + 2, 1, '"}"', "@enduml")
        else:
            a = sc.name("node declaration or path")
            sc.literal(" ", "path token")
            sc.literal("--", 'path token "--"')
            sc.literal(" ", "identifier")
            b = sc.name("identifier")
            label: str | None = None
            if sc.try_literal(" : "):
                label = sc.label()
            sc.end()
            paths.append((DeploymentPath(a, b, label), line_no))
        i += 1
    declared = set(nodes)
    for path, line_no in paths:  # paths may reference forward-declared nodes
        if path.node_a not in declared:
            raise DanglingEndpoint(path.node_a, line_no)
        if path.node_b not in declared:
            raise DanglingEndpoint(path.node_b, line_no)
    return DeploymentModel(tuple(nodes), tuple(artifacts), tuple(placements), tuple(p for p, _ in paths))
