"""Knowledge-grounded multi-agent engine for automated software architecture design."""

__version__ = "0.1.0"

from maad.artifacts import DesignPackage, canonicalize, package_digest, validate_package
from maad.orchestrator import (
    Session,
    SessionConfig,
    replay,
    run_to_completion,
    start_session,
    step,
    submit_clarification_answer,
)

__all__ = [
    "DesignPackage",
    "Session",
    "SessionConfig",
    "__version__",
    "canonicalize",
    "package_digest",
    "replay",
    "run_to_completion",
    "start_session",
    "step",
    "submit_clarification_answer",
    "validate_package",
]
