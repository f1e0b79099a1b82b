"""Shipped diagrams and polygonal knots with their expected values."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from .decker_model import DeckerDiagram, parse_diagram
from .quadrisecant_engine import PolyKnot, parse_knot

DATA_ENV = "KNOTMU_DATA"


@dataclass(frozen=True)
class DiagramEntry:
    name: str
    mu: int
    n4: Optional[int] = None
    n2: Optional[int] = None
    provenance: str = "text"

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "mu": self.mu, "n4": self.n4, "n2": self.n2, "provenance": self.provenance}


@dataclass(frozen=True)
class KnotEntry:
    name: str
    c2: int

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "c2": self.c2}


DIAGRAMS: Dict[str, DiagramEntry] = {
    "0_1": DiagramEntry("0_1", 0, 0, 0),
    "8_1": DiagramEntry("8_1", 0, 1, 3),
    "9_1": DiagramEntry("9_1", 0),
    "10_1": DiagramEntry("10_1", 0),
    "10_2": DiagramEntry("10_2", 1, 1, 0, provenance="figure"),
    "10_3": DiagramEntry("10_3", 0, 0, 0, provenance="figure"),
}

KNOTS: Dict[str, KnotEntry] = {
    "unknot": KnotEntry("unknot", 0),
    "3_1": KnotEntry("3_1", 1),
    "4_1": KnotEntry("4_1", -1),
    "5_1": KnotEntry("5_1", 3),
    "5_2": KnotEntry("5_2", 2),
    "6_1": KnotEntry("6_1", -2),
}


def data_root() -> Path:
    override = os.environ.get(DATA_ENV)
    if override:
        return Path(override).expanduser()
    return Path(__file__).resolve().parent.parent


def diagram_path(name: str) -> Path:
    if name not in DIAGRAMS:
        raise KeyError(f"No shipped diagram named '{name}'")
    return data_root() / "knots" / f"{name}.diagram"


def knot_path(name: str, suffix: str = ".knot") -> Path:
    if name not in KNOTS:
        raise KeyError(f"No shipped knot named '{name}'")
    return data_root() / "classical" / f"{name}{suffix}"


def load_diagram(name: str) -> DeckerDiagram:
    return parse_diagram(diagram_path(name).read_text(encoding="utf-8"))


def load_knot(name: str) -> PolyKnot:
    return parse_knot(knot_path(name).read_text(encoding="utf-8"))


def listing() -> List[Dict[str, Any]]:
    """One row per shipped file, for the ``corpus`` command."""
    rows: List[Dict[str, Any]] = []
    for entry in DIAGRAMS.values():
        row = entry.to_dict()
        row.update(kind="diagram", path=str(diagram_path(entry.name)))
        rows.append(row)
    for entry in KNOTS.values():
        row = entry.to_dict()
        row.update(kind="knot", path=str(knot_path(entry.name)))
        rows.append(row)
    return rows


__all__ = [
    "DATA_ENV",
    "DIAGRAMS",
    "DiagramEntry",
    "KNOTS",
    "KnotEntry",
    "data_root",
    "diagram_path",
    "knot_path",
    "listing",
    "load_diagram",
    "load_knot",
]
