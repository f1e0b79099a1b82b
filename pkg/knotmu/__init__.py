"""Mod-2 overcrossing-cycle invariant of 2-knots, with classical cross-checks.

The package computes mu on decker diagrams (``mu2_engine``), counts
alternating quadrisecants of polygonal knots (``quadrisecant_engine``) and
checks both against brute-force and classical oracles.
"""

__version__ = "0.3.0"

from .config import DEFAULT_TOLERANCE, Settings, Tolerance, load_settings
from .decker_model import DeckerDiagram, parse_diagram, serialize_diagram, strip_union, validate
from .errors import (
    DegenerateConfigurationError,
    KnotMuError,
    NormalizationError,
    ParameterDomainError,
    ParseError,
    StructuralError,
    UnresolvedDegeneracyError,
    UnsupportedInputError,
)
from .mu2_engine import MuResult, StableMuResult, mu2, stable_mu2
from .quadrisecant_engine import PolyKnot, count_alternating_quadrisecants, parse_knot

__all__ = [
    "__version__",
    "DEFAULT_TOLERANCE",
    "DeckerDiagram",
    "DegenerateConfigurationError",
    "KnotMuError",
    "MuResult",
    "NormalizationError",
    "ParameterDomainError",
    "ParseError",
    "PolyKnot",
    "Settings",
    "StableMuResult",
    "StructuralError",
    "Tolerance",
    "UnresolvedDegeneracyError",
    "UnsupportedInputError",
    "count_alternating_quadrisecants",
    "load_settings",
    "mu2",
    "parse_diagram",
    "parse_knot",
    "serialize_diagram",
    "stable_mu2",
    "strip_union",
    "validate",
]
