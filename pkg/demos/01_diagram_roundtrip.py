"""Emit and parse the UML text dialect.

Builds a small class model, renders it to diagram text, parses the text back,
and shows the precise error reporting on a malformed line.
"""

from maad.artifacts import ClassAttribute, ClassModel, ClassRelation, ClassRelationKind, UmlClass
from maad.diagrams import ParseError, emit_diagram, parse_diagram

model = ClassModel(
    classes=(
        UmlClass(
            "Order",
            attributes=(ClassAttribute("id", "String"), ClassAttribute("total", "Money")),
            methods=("place(): Receipt",),
        ),
        UmlClass("Receipt"),
    ),
    relations=(ClassRelation("Order", "Receipt", ClassRelationKind.DEPENDS),),
)

text = emit_diagram(model).text
print("emitted diagram:\n")
print(text)

# the emitter and parser share one grammar, so the text parses back to the model
assert parse_diagram("class", text) == model
print("\nround-trip: parse(emit(model)) == model")

# a malformed relation is rejected with line and column, never skipped
broken = text.replace("Order ..> Receipt", "Order ..> 42")
try:
    parse_diagram("class", broken)
except ParseError as err:
    print(f"\nbroken line rejected: line {err.line_number}, column {err.column}, "
          f"expected {err.expected}, found {err.found!r}")
