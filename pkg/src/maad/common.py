"""Shared enums, error types, and canonical JSON helpers."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from enum import Enum
from typing import Any


class RoleName(str, Enum):
    """The four fixed agent roles of the design pipeline."""

    ANALYST = "analyst"
    MODELER = "modeler"
    DESIGNER = "designer"
    EVALUATOR = "evaluator"


class Stage(str, Enum):
    """Pipeline stage responsible for an artifact, in upstream-to-downstream order."""

    ANALYSIS = "analysis"
    MODELING = "modeling"
    DESIGN = "design"


# Upstream-first ordering used for refinement routing.
STAGE_ORDER: dict[Stage, int] = {Stage.ANALYSIS: 0, Stage.MODELING: 1, Stage.DESIGN: 2}


def canonical_json(value: Any) -> str:
    """Serialize to the canonical compact JSON form (sorted keys, no padding)."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds").replace("+00:00", "Z")


class MaadError(Exception):
    """Base class for engine errors; `code` is the wire-level error identifier."""

    code = "InternalError"

    def __init__(self, message: str = "", **details: Any) -> None:
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details


class InvalidPackage(MaadError):
    code = "InvalidPackage"


class EmptyDocument(MaadError):
    code = "EmptyDocument"


class NoRoleTags(MaadError):
    code = "NoRoleTags"


class EmptyText(MaadError):
    code = "EmptyText"


class IndexUnavailable(MaadError):
    code = "IndexUnavailable"


class MissingInput(MaadError):
    code = "MissingInput"


class BackendUnavailable(MaadError):
    code = "BackendUnavailable"


class EmptySrs(MaadError):
    code = "EmptySrs"


class InvalidConfig(MaadError):
    code = "InvalidConfig"


class TerminalState(MaadError):
    code = "TerminalState"


class UnknownSession(MaadError):
    code = "UnknownSession"


class UnknownQuestion(MaadError):
    code = "UnknownQuestion"


class InvalidState(MaadError):
    code = "InvalidState"


class AlreadyAnswered(MaadError):
    code = "AlreadyAnswered"


class EmptyJournal(MaadError):
    code = "EmptyJournal"


class CorruptJournal(MaadError):
    code = "CorruptJournal"


class UnknownKind(MaadError):
    code = "UnknownKind"
