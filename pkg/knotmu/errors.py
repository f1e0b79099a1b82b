"""Exception hierarchy for knotmu.

Validation findings are returned as data by ``decker_model.validate``; the
classes here are for failures that stop a computation.
"""

from __future__ import annotations

from typing import Any, List, Optional


class KnotMuError(Exception):
    """Base class for every error raised by the library."""


class ParseError(KnotMuError):
    """Malformed input file. Carries the offending line and/or field."""

    def __init__(
        self,
        message: str,
        *,
        line: Optional[int] = None,
        field: Optional[str] = None,
        suggestion: Optional[str] = None,
    ) -> None:
        self.line = line
        self.field = field
        self.suggestion = suggestion
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        text = message
        if location:
            text = f"{', '.join(location)}: {message}"
        if suggestion:
            text = f"{text} (did you mean '{suggestion}'?)"
        super().__init__(text)


class StructuralError(KnotMuError):
    """The object is syntactically fine but violates a structural invariant."""


class ParameterDomainError(KnotMuError, ValueError):
    """A curve parameter fell outside [0, 1)."""


class DegenerateConfigurationError(KnotMuError):
    """Four supporting lines whose transversal quadratic vanishes identically."""


class UnsupportedInputError(KnotMuError):
    """Input describes something outside the supported class (e.g. a link)."""


class NormalizationError(KnotMuError):
    """A Laurent polynomial is not a normalized knot polynomial."""


class UnresolvedDegeneracyError(KnotMuError):
    """Degeneracies persisted through every perturbation retry."""

    def __init__(self, message: str, events: Optional[List[Any]] = None, retries: Optional[List[Any]] = None) -> None:
        self.events = list(events or [])
        self.retries = list(retries or [])
        super().__init__(message)


__all__ = [
    "KnotMuError",
    "ParseError",
    "StructuralError",
    "ParameterDomainError",
    "DegenerateConfigurationError",
    "UnsupportedInputError",
    "NormalizationError",
    "UnresolvedDegeneracyError",
]
