"""Double-point (decker) diagrams.

A diagram is a set of planar curves whose parameter domains are cut into
edges labeled ``over`` or ``under``. Every over edge is paired with one under
edge by an affine correspondence of parameter intervals (preserving or
reversing orientation). Triple vertices record where three curve branches
meet, together with the relative height of each branch.

Files are UTF-8 JSON validated by the pydantic models below; unknown keys are
rejected. ``diagram_json_schema()`` produces the schema shipped in docs/.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from rapidfuzz import process

from .config import DEFAULT_TOLERANCE, Tolerance
from .errors import ParseError, StructuralError
from .geom_core import PLCurve, Point2, curve_track, eval_curve_wrapped, self_intersections, PLFunction

logger = logging.getLogger("knotmu.decker_model")


class Label(str, Enum):
    OVER = "over"
    UNDER = "under"


class Orientation(str, Enum):
    PRESERVING = "preserving"
    REVERSING = "reversing"


HEIGHTS = ("top", "middle", "bottom")


# ------------------------------
# Domain records
# ------------------------------
@dataclass(frozen=True)
class Edge:
    id: str
    curve: str
    t0: float
    t1: float
    label: Label

    @property
    def length(self) -> float:
        return self.t1 - self.t0 if self.t1 > self.t0 else self.t1 - self.t0 + 1.0

    @property
    def is_full(self) -> bool:
        return self.t0 == 0.0 and self.t1 == 1.0

    def local(self, t: float) -> float:
        """Curve parameter -> fraction along the edge."""
        d = t - self.t0
        if d < 0:
            d += 1.0
        return d / self.length

    def param(self, lam: float) -> float:
        """Fraction along the edge -> curve parameter (may equal 1.0)."""
        t = self.t0 + lam * self.length
        return t - 1.0 if t > 1.0 else t

    def contains(self, t: float, slack: float = 0.0) -> bool:
        if self.is_full:
            return 0.0 <= t <= 1.0
        d = t - self.t0
        if d < -slack:
            d += 1.0
        return -slack <= d <= self.length + slack

    def boundary_distance(self, t: float) -> float:
        """Parameter distance from t to the nearest edge endpoint."""
        if self.is_full:
            return math.inf
        lam = min(max(self.local(t), 0.0), 1.0)
        return min(lam, 1.0 - lam) * self.length

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.id, "curve": self.curve, "t0": self.t0, "t1": self.t1, "label": self.label.value}


@dataclass(frozen=True)
class Pairing:
    over: str
    under: str
    orientation: Orientation = Orientation.PRESERVING

    @property
    def reversing(self) -> bool:
        return self.orientation is Orientation.REVERSING

    def partner(self, edge_id: str) -> str:
        if edge_id == self.over:
            return self.under
        if edge_id == self.under:
            return self.over
        raise StructuralError(f"Edge '{edge_id}' is not part of pairing {self.over}->{self.under}")

    def to_dict(self) -> Dict[str, Any]:
        return {"over": self.over, "under": self.under, "orientation": self.orientation.value}


@dataclass(frozen=True)
class Incidence:
    curve: str
    t: float


@dataclass(frozen=True)
class TripleVertex:
    id: str
    incident: Tuple[Incidence, Incidence, Incidence]
    heights: Tuple[str, str, str] = HEIGHTS

    def height_of(self, index: int) -> str:
        return self.heights[index]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "incident": [{"curve": inc.curve, "t": inc.t} for inc in self.incident],
            "heights": list(self.heights),
        }


@dataclass(frozen=True)
class EdgePoint:
    edge: str
    t: float


@dataclass(frozen=True)
class DeckerDiagram:
    name: str
    curves: Mapping[str, PLCurve] = field(default_factory=dict)
    edges: Tuple[Edge, ...] = ()
    pairings: Tuple[Pairing, ...] = ()
    triple_vertices: Tuple[TripleVertex, ...] = ()
    note: Optional[str] = None

    def __hash__(self) -> int:
        return hash((self.name, tuple(self.curves), self.edges, self.pairings, self.triple_vertices))

    @property
    def is_empty(self) -> bool:
        return not self.curves

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise StructuralError(f"Unknown edge '{edge_id}'")

    def edges_on(self, curve_id: str) -> List[Edge]:
        return sorted((e for e in self.edges if e.curve == curve_id), key=lambda e: e.t0)

    def over_edges(self) -> List[Edge]:
        return [e for e in self.edges if e.label is Label.OVER]

    def under_edges(self) -> List[Edge]:
        return [e for e in self.edges if e.label is Label.UNDER]

    def pairing_of(self, edge_id: str) -> Pairing:
        for p in self.pairings:
            if edge_id in (p.over, p.under):
                return p
        raise StructuralError(f"Edge '{edge_id}' belongs to no pairing")

    def partner(self, edge_id: str) -> Edge:
        return self.edge(self.pairing_of(edge_id).partner(edge_id))

    def with_curves(self, curves: Mapping[str, PLCurve]) -> "DeckerDiagram":
        return replace(self, curves=dict(curves))

    def edge_param(self, edge: Edge, lam: float) -> float:
        t = edge.param(lam)
        if t >= 1.0 and self.curves[edge.curve].closed:
            t -= 1.0
        return t

    def boundary_distance(self, p: EdgePoint) -> float:
        """Parameter distance from p to the nearest edge endpoint, open-arc ends included."""
        edge = self.edge(p.edge)
        gap = edge.boundary_distance(p.t)
        if not self.curves[edge.curve].closed:
            gap = min(gap, p.t, 1.0 - p.t)
        return gap

    def at_arc_end(self, p: EdgePoint, slack: float) -> bool:
        edge = self.edge(p.edge)
        return not self.curves[edge.curve].closed and min(p.t, 1.0 - p.t) < slack

    def point(self, p: EdgePoint) -> Point2:
        edge = self.edge(p.edge)
        return eval_curve_wrapped(self.curves[edge.curve], p.t)

    def edge_track(self, edge: Edge, axis: int, reverse: bool = False) -> PLFunction:
        """Coordinate ``axis`` along the edge as a PL function of the edge fraction."""
        return curve_track(self.curves[edge.curve], edge.t0, edge.length, axis, reverse=reverse)

    def partner_track(self, edge: Edge, axis: int) -> PLFunction:
        """Coordinate ``axis`` of tau(edge(lam)) as a PL function of lam."""
        pairing = self.pairing_of(edge.id)
        return self.edge_track(self.partner(edge.id), axis, reverse=pairing.reversing)


@dataclass
class Violation:
    kind: str
    message: str
    subject: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "message": self.message, "subject": self.subject}


@dataclass
class ValidationReport:
    name: str
    violations: List[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> List[str]:
        return sorted({v.kind for v in self.violations})

    def add(self, kind: str, message: str, subject: Optional[str] = None) -> None:
        self.violations.append(Violation(kind, message, subject))

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "valid": self.valid, "violations": [v.to_dict() for v in self.violations]}


# ------------------------------
# File schema
# ------------------------------
class CurveModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    closed: bool = True
    vertices: List[Tuple[float, float]]


class EdgeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    curve: str
    t0: float = Field(ge=0.0, le=1.0)
    t1: float = Field(ge=0.0, le=1.0)
    label: Literal["over", "under"]


class PairingModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    over: str
    under: str
    orientation: Literal["preserving", "reversing"] = "preserving"


class IncidenceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    curve: str
    t: float = Field(ge=0.0, le=1.0)


class TripleVertexModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    incident: List[IncidenceModel] = Field(min_length=3, max_length=3)
    heights: List[Literal["top", "middle", "bottom"]] = Field(default_factory=lambda: list(HEIGHTS), min_length=3, max_length=3)


class DiagramFile(BaseModel):
    """Top-level JSON document of a ``.diagram`` file."""

    model_config = ConfigDict(extra="forbid", title="DeckerDiagram")

    name: str
    curves: List[CurveModel] = Field(default_factory=list)
    edges: List[EdgeModel] = Field(default_factory=list)
    pairings: List[PairingModel] = Field(default_factory=list)
    triple_vertices: List[TripleVertexModel] = Field(default_factory=list)
    note: Optional[str] = None


_FIELDS_BY_SECTION: Dict[Optional[str], List[str]] = {
    None: list(DiagramFile.model_fields),
    "curves": list(CurveModel.model_fields),
    "edges": list(EdgeModel.model_fields),
    "pairings": list(PairingModel.model_fields),
    "triple_vertices": list(TripleVertexModel.model_fields),
    "incident": list(IncidenceModel.model_fields),
}


def diagram_json_schema() -> Dict[str, Any]:
    return DiagramFile.model_json_schema()


def _suggest(word: str, choices: Iterable[str]) -> Optional[str]:
    options = list(choices)
    if not options:
        return None
    match = process.extractOne(word, options, score_cutoff=60)
    return match[0] if match else None


def _skip_value(text: str, pos: int) -> int:
    """Index just past the JSON value starting at or after pos."""
    depth = 0
    in_string = False
    i = pos
    while i < len(text):
        ch = text[i]
        if in_string:
            if ch == "\\":
                i += 2
                continue
            if ch == '"':
                in_string = False
                if depth == 0:
                    return i + 1
        elif ch == '"':
            in_string = True
        elif ch in "[{":
            depth += 1
        elif ch in "]}":
            if depth == 0:
                return i
            depth -= 1
            if depth == 0:
                return i + 1
        elif ch == "," and depth == 0:
            return i
        i += 1
    return i


def _locate(text: str, loc: Sequence[Any]) -> Optional[int]:
    """Best-effort 1-based line number of a pydantic error location."""
    pos = 0
    try:
        for part in loc:
            if isinstance(part, int):
                pos = text.index("[", pos) + 1
                for _ in range(part):
                    while text[pos] in " \t\r\n":
                        pos += 1
                    pos = _skip_value(text, pos)
                    pos = text.index(",", pos) + 1
                while text[pos] in " \t\r\n":
                    pos += 1
            else:
                pos = text.index(f'"{part}"', pos)
    except (ValueError, IndexError):
        return None
    return text.count("\n", 0, pos) + 1


def _parse_error_from_validation(text: str, exc: ValidationError) -> ParseError:
    err = exc.errors()[0]
    loc = tuple(err.get("loc", ()))
    names = [p for p in loc if isinstance(p, str)]
    field_name = ".".join(str(p) for p in loc) or None
    line = _locate(text, loc)
    suggestion = None
    if err.get("type") == "extra_forbidden" and names:
        section = names[-2] if len(names) >= 2 else None
        suggestion = _suggest(names[-1], _FIELDS_BY_SECTION.get(section, []))
    return ParseError(err.get("msg", "invalid value"), line=line, field=field_name, suggestion=suggestion)


def parse_diagram(text: str) -> DeckerDiagram:
    """Parse the JSON diagram format into a DeckerDiagram.

    Raises ParseError for malformed JSON, schema violations, duplicate ids and
    dangling references; the error names the line and field when known.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    try:
        doc = DiagramFile.model_validate(raw)
    except ValidationError as exc:
        raise _parse_error_from_validation(text, exc) from exc

    def fail(message: str, loc: Sequence[Any], word: Optional[str] = None, choices: Iterable[str] = ()) -> ParseError:
        return ParseError(
            message,
            line=_locate(text, loc),
            field=".".join(str(p) for p in loc),
            suggestion=_suggest(word, choices) if word is not None else None,
        )

    curves: Dict[str, PLCurve] = {}
    for i, c in enumerate(doc.curves):
        if c.id in curves:
            raise fail(f"duplicate curve id '{c.id}'", ("curves", i, "id"))
        try:
            curves[c.id] = PLCurve(tuple(c.vertices), c.closed)
        except ValueError as exc:
            raise fail(str(exc), ("curves", i, "vertices")) from exc

    edges: List[Edge] = []
    seen_edges: set = set()
    for i, e in enumerate(doc.edges):
        if e.id in seen_edges:
            raise fail(f"duplicate edge id '{e.id}'", ("edges", i, "id"))
        if e.curve not in curves:
            raise fail(f"unknown curve id '{e.curve}'", ("edges", i, "curve"), e.curve, curves)
        if e.t0 == e.t1:
            raise fail(f"edge '{e.id}' has t0 == t1", ("edges", i, "t1"))
        seen_edges.add(e.id)
        edges.append(Edge(e.id, e.curve, e.t0, e.t1, Label(e.label)))

    pairings: List[Pairing] = []
    for i, p in enumerate(doc.pairings):
        for key in ("over", "under"):
            ref = getattr(p, key)
            if ref not in seen_edges:
                raise fail(f"unknown edge id '{ref}'", ("pairings", i, key), ref, seen_edges)
        if p.over == p.under:
            raise fail(f"pairing joins edge '{p.over}' to itself", ("pairings", i, "under"))
        pairings.append(Pairing(p.over, p.under, Orientation(p.orientation)))

    vertices: List[TripleVertex] = []
    seen_tv: set = set()
    for i, tv in enumerate(doc.triple_vertices):
        if tv.id in seen_tv:
            raise fail(f"duplicate triple vertex id '{tv.id}'", ("triple_vertices", i, "id"))
        for j, inc in enumerate(tv.incident):
            if inc.curve not in curves:
                raise fail(f"unknown curve id '{inc.curve}'", ("triple_vertices", i, "incident", j, "curve"), inc.curve, curves)
        seen_tv.add(tv.id)
        vertices.append(
            TripleVertex(
                tv.id,
                tuple(Incidence(inc.curve, inc.t) for inc in tv.incident),  # type: ignore[arg-type]
                tuple(tv.heights),  # type: ignore[arg-type]
            )
        )

    diagram = DeckerDiagram(doc.name, curves, tuple(edges), tuple(pairings), tuple(vertices), doc.note)
    logger.debug("Parsed diagram %s: %d curves, %d edges, %d pairings", doc.name, len(curves), len(edges), len(pairings))
    return diagram


def serialize_diagram(diagram: DeckerDiagram) -> str:
    doc = {
        "name": diagram.name,
        "curves": [
            {"id": cid, "closed": c.closed, "vertices": c.to_list()} for cid, c in diagram.curves.items()
        ],
        "edges": [e.to_dict() for e in diagram.edges],
        "pairings": [p.to_dict() for p in diagram.pairings],
        "triple_vertices": [tv.to_dict() for tv in diagram.triple_vertices],
    }
    if diagram.note:
        doc["note"] = diagram.note
    return json.dumps(doc, indent=2) + "\n"


# ------------------------------
# Validation
# ------------------------------
def _check_partition(diagram: DeckerDiagram, report: ValidationReport, tol: Tolerance) -> None:
    for cid, curve in diagram.curves.items():
        edges = diagram.edges_on(cid)
        if not edges:
            report.add("edge-partition", f"curve '{cid}' carries no edges", cid)
            continue
        if curve.closed:
            if len(edges) == 1 and edges[0].is_full:
                continue
            total = sum(e.length for e in edges)
            if abs(total - 1.0) > tol.eq_tol:
                report.add("edge-partition", f"edges on '{cid}' cover {total:.9g} of the curve, expected 1", cid)
                continue
            for a, b in zip(edges, edges[1:] + edges[:1]):
                if abs(a.t1 - b.t0) > tol.eq_tol and abs(abs(a.t1 - b.t0) - 1.0) > tol.eq_tol:
                    report.add("edge-partition", f"gap or overlap between edges '{a.id}' and '{b.id}'", cid)
        else:
            if any(e.t1 <= e.t0 for e in edges):
                report.add("edge-partition", f"edge on open arc '{cid}' wraps around", cid)
                continue
            cursor = 0.0
            for e in edges:
                if abs(e.t0 - cursor) > tol.eq_tol:
                    report.add("edge-partition", f"edge '{e.id}' starts at {e.t0}, expected {cursor}", cid)
                cursor = e.t1
            if abs(cursor - 1.0) > tol.eq_tol:
                report.add("edge-partition", f"edges on arc '{cid}' stop at {cursor}, expected 1", cid)


def _incidence_params(diagram: DeckerDiagram) -> Dict[str, List[float]]:
    params: Dict[str, List[float]] = {}
    for tv in diagram.triple_vertices:
        for inc in tv.incident:
            params.setdefault(inc.curve, []).append(inc.t)
    return params


def _param_close(a: float, b: float, tol: float) -> bool:
    d = abs(a - b)
    return d <= tol or abs(d - 1.0) <= tol


def _is_branch_point(diagram: DeckerDiagram, edge: Edge, t: float, tol: Tolerance) -> bool:
    """True when the pairing fixes the endpoint, as for a curve paired with itself."""
    try:
        image = tau(diagram, EdgePoint(edge.id, t))
        partner = diagram.edge(image.edge)
    except StructuralError:
        return False
    return partner.curve == edge.curve and _param_close(image.t, t, tol.endpoint_tol)


def _check_endpoints(diagram: DeckerDiagram, report: ValidationReport, tol: Tolerance) -> None:
    params = _incidence_params(diagram)
    for e in diagram.edges:
        if e.is_full and diagram.curves[e.curve].closed:
            continue
        curve = diagram.curves[e.curve]
        for t in (e.t0, e.t1):
            if not curve.closed and t in (0.0, 1.0):
                continue
            if any(_param_close(t, p, tol.endpoint_tol) for p in params.get(e.curve, [])):
                continue
            if not _is_branch_point(diagram, e, t, tol):
                report.add("edge-endpoint", f"endpoint t={t} of edge '{e.id}' is not at a triple vertex or arc end", e.id)


def _check_pairings(diagram: DeckerDiagram, report: ValidationReport, tol: Tolerance) -> None:
    uses: Dict[str, int] = {e.id: 0 for e in diagram.edges}
    for p in diagram.pairings:
        for ref in (p.over, p.under):
            if ref in uses:
                uses[ref] += 1
        over = next((e for e in diagram.edges if e.id == p.over), None)
        under = next((e for e in diagram.edges if e.id == p.under), None)
        if over is None or under is None:
            report.add("pairing-involution", f"pairing {p.over}->{p.under} references a missing edge", p.over)
            continue
        if over.label is not Label.OVER or under.label is not Label.UNDER:
            report.add(
                "label-complementarity",
                f"pairing {p.over}->{p.under} joins labels {over.label.value}/{under.label.value}",
                p.over,
            )
    for edge_id, count in uses.items():
        if count == 0:
            report.add("unpaired-edge", f"edge '{edge_id}' belongs to no pairing", edge_id)
        elif count > 1:
            report.add("pairing-involution", f"edge '{edge_id}' appears in {count} pairings", edge_id)
    if any(v.kind in ("pairing-involution", "unpaired-edge") for v in report.violations):
        return
    for e in diagram.edges:
        for lam in (0.0, 0.37, 1.0):
            p = EdgePoint(e.id, diagram.edge_param(e, lam))
            back = tau(diagram, tau(diagram, p))
            if back.edge != e.id or not _param_close(back.t, p.t, tol.eq_tol):
                report.add("pairing-involution", f"tau(tau(p)) != p on edge '{e.id}'", e.id)
                break


def _edges_touching(diagram: DeckerDiagram, inc: Incidence, tol: Tolerance) -> List[Edge]:
    return [e for e in diagram.edges_on(inc.curve) if e.is_full or e.contains(inc.t, tol.endpoint_tol)]


def _check_triple_vertices(diagram: DeckerDiagram, report: ValidationReport, tol: Tolerance) -> None:
    for tv in diagram.triple_vertices:
        if sorted(tv.heights) != sorted(HEIGHTS):
            report.add("triple-vertex", f"heights of '{tv.id}' are not a permutation of top/middle/bottom", tv.id)
            continue
        points = []
        for inc in tv.incident:
            curve = diagram.curves.get(inc.curve)
            if curve is None:
                report.add("triple-vertex", f"'{tv.id}' references unknown curve '{inc.curve}'", tv.id)
                break
            points.append(eval_curve_wrapped(curve, inc.t))
        else:
            spread = max(a.distance(b) for a in points for b in points)
            if spread > tol.sep_tol:
                report.add("triple-vertex", f"incident points of '{tv.id}' spread {spread:.3g} apart", tv.id)
            for inc, height in zip(tv.incident, tv.heights):
                touching = _edges_touching(diagram, inc, tol)
                if height == "top" and any(e.label is not Label.OVER for e in touching):
                    report.add("triple-vertex", f"top sheet of '{tv.id}' on curve '{inc.curve}' has an under edge", tv.id)
                if height == "bottom" and any(e.label is not Label.UNDER for e in touching):
                    report.add("triple-vertex", f"bottom sheet of '{tv.id}' on curve '{inc.curve}' has an over edge", tv.id)


def _check_geometry(diagram: DeckerDiagram, report: ValidationReport, tol: Tolerance) -> None:
    for cid, curve in diagram.curves.items():
        radii = np.hypot(curve.points[:, 0], curve.points[:, 1])
        if float(radii.max()) > 1.0 + tol.eq_tol:
            report.add("unit-disk", f"curve '{cid}' leaves the unit disk (max radius {radii.max():.6g})", cid)
        hits = self_intersections(curve, tol.sep_tol)
        if hits:
            i, j = hits[0]
            report.add("self-intersection", f"curve '{cid}' segments {i} and {j} come within sep_tol", cid)


def validate(diagram: DeckerDiagram, tol: Tolerance = DEFAULT_TOLERANCE) -> ValidationReport:
    """Collect structural violations; never raises for bad diagrams."""
    report = ValidationReport(diagram.name)
    _check_partition(diagram, report, tol)
    _check_endpoints(diagram, report, tol)
    _check_pairings(diagram, report, tol)
    _check_triple_vertices(diagram, report, tol)
    _check_geometry(diagram, report, tol)
    if report.violations:
        logger.info("Diagram %s has %d violations", diagram.name, len(report.violations))
    return report


# ------------------------------
# Involution
# ------------------------------
def tau(diagram: DeckerDiagram, p: EdgePoint) -> EdgePoint:
    """Map a point of a paired edge to the corresponding point of its partner."""
    pairing = diagram.pairing_of(p.edge)
    edge = diagram.edge(p.edge)
    partner = diagram.edge(pairing.partner(p.edge))
    lam = min(max(edge.local(p.t), 0.0), 1.0)
    if pairing.reversing:
        lam = 1.0 - lam
    return EdgePoint(partner.id, diagram.edge_param(partner, lam))


# ------------------------------
# Structural operations
# ------------------------------
def _map_curves(diagram: DeckerDiagram, fn) -> Dict[str, PLCurve]:
    return {
        cid: PLCurve(tuple(fn(np.asarray(v)) for v in c.vertices), c.closed) for cid, c in diagram.curves.items()
    }


def transform_diagram(diagram: DeckerDiagram, scale: float, offset: Tuple[float, float] = (0.0, 0.0)) -> DeckerDiagram:
    """Apply x -> scale*x + offset to every curve; combinatorics unchanged."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    off = np.asarray(offset, dtype=float)
    return diagram.with_curves(_map_curves(diagram, lambda v: tuple(scale * v + off)))


def reflect_diagram(diagram: DeckerDiagram) -> DeckerDiagram:
    """Mirror the diagram across the x2 axis (x1 -> -x1)."""
    return diagram.with_curves(_map_curves(diagram, lambda v: (-float(v[0]), float(v[1]))))


def resample_diagram(diagram: DeckerDiagram, factor: int = 2) -> DeckerDiagram:
    """Subdivide every segment into ``factor`` pieces.

    Existing vertices keep their parameters, so edges, pairings and triple
    vertices carry over unchanged.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    curves: Dict[str, PLCurve] = {}
    for cid, c in diagram.curves.items():
        pts = c.points
        nxt = np.roll(pts, -1, axis=0) if c.closed else pts[1:]
        base = pts if c.closed else pts[:-1]
        fracs = np.arange(factor) / factor
        dense = (base[:, None, :] + fracs[None, :, None] * (nxt - base)[:, None, :]).reshape(-1, 2)
        if not c.closed:
            dense = np.vstack([dense, pts[-1:]])
        curves[cid] = PLCurve(tuple(map(tuple, dense)), c.closed)
    return diagram.with_curves(curves)


def rotate_curve_start(diagram: DeckerDiagram, curve_id: str, k: int) -> DeckerDiagram:
    """Start closed curve ``curve_id`` at its vertex k, shifting parameters to match.

    Partial edges and triple-vertex incidences follow their points. A full edge
    stays [0, 1], so its correspondence origin moves with the new start vertex.
    """
    curve = diagram.curves[curve_id]
    if not curve.closed:
        raise ValueError(f"curve '{curve_id}' is an open arc")
    n = len(curve.vertices)
    k %= n
    shift = k / n

    def moved(t: float) -> float:
        s = t - shift
        return s + 1.0 if s < 0 else s

    curves = dict(diagram.curves)
    curves[curve_id] = PLCurve(curve.vertices[k:] + curve.vertices[:k], True)
    edges = tuple(
        replace(e, t0=moved(e.t0), t1=moved(e.t1)) if e.curve == curve_id and not e.is_full else e
        for e in diagram.edges
    )
    vertices = tuple(
        replace(
            tv,
            incident=tuple(Incidence(inc.curve, moved(inc.t)) if inc.curve == curve_id else inc for inc in tv.incident),
        )
        for tv in diagram.triple_vertices
    )
    return replace(diagram, curves=curves, edges=edges, triple_vertices=vertices)


def _prefixed(diagram: DeckerDiagram, prefix: str, center: Tuple[float, float], scale: float) -> DeckerDiagram:
    c = np.asarray(center, dtype=float)
    curves = {
        f"{prefix}{cid}": PLCurve(tuple(tuple(c + scale * np.asarray(v)) for v in curve.vertices), curve.closed)
        for cid, curve in diagram.curves.items()
    }
    edges = tuple(replace(e, id=f"{prefix}{e.id}", curve=f"{prefix}{e.curve}") for e in diagram.edges)
    pairings = tuple(replace(p, over=f"{prefix}{p.over}", under=f"{prefix}{p.under}") for p in diagram.pairings)
    vertices = tuple(
        TripleVertex(
            f"{prefix}{tv.id}",
            tuple(Incidence(f"{prefix}{inc.curve}", inc.t) for inc in tv.incident),  # type: ignore[arg-type]
            tv.heights,
        )
        for tv in diagram.triple_vertices
    )
    return DeckerDiagram(diagram.name, curves, edges, pairings, vertices)


def strip_union(d1: DeckerDiagram, d2: DeckerDiagram) -> DeckerDiagram:
    """Place d1 in the left half-disk and d2 in the right half-disk.

    Both are scaled by 0.49 about the points (-0.5, 0) and (0.5, 0), so their
    x1-ranges stay at least 0.02 apart. Ids are prefixed with ``L.``/``R.``.
    """
    left = _prefixed(d1, "L.", (-0.5, 0.0), 0.49)
    right = _prefixed(d2, "R.", (0.5, 0.0), 0.49)
    return DeckerDiagram(
        name=f"{d1.name}#{d2.name}",
        curves={**left.curves, **right.curves},
        edges=left.edges + right.edges,
        pairings=left.pairings + right.pairings,
        triple_vertices=left.triple_vertices + right.triple_vertices,
    )


# ------------------------------
# Builders
# ------------------------------
def circle_curve(
    center: Tuple[float, float],
    radius: float,
    n: int = 64,
    phase: float = math.pi / 128,
) -> PLCurve:
    """Regular n-gon inscribed in a circle, vertex k at angle phase + 2*pi*k/n."""
    angles = phase + 2.0 * math.pi * np.arange(n) / n
    xs = center[0] + radius * np.cos(angles)
    ys = center[1] + radius * np.sin(angles)
    return PLCurve(tuple(zip(xs.tolist(), ys.tolist())), True)


def random_circle_diagram(
    rng: np.random.Generator,
    pairings: int = 3,
    n: int = 24,
    name: str = "random",
) -> DeckerDiagram:
    """Diagram of 2*pairings random circles, each a single edge, paired in order."""
    curves: Dict[str, PLCurve] = {}
    edges: List[Edge] = []
    pairs: List[Pairing] = []
    for i in range(2 * pairings):
        radius = float(rng.uniform(0.08, 0.35))
        reach = 0.95 - radius
        cx, cy = (float(v) for v in rng.uniform(-reach / math.sqrt(2), reach / math.sqrt(2), size=2))
        phase = float(rng.uniform(0.0, 2.0 * math.pi / n))
        cid = f"c{i}"
        curves[cid] = circle_curve((cx, cy), radius, n=n, phase=phase)
        label = Label.OVER if i % 2 == 0 else Label.UNDER
        edges.append(Edge(f"e{i}", cid, 0.0, 1.0, label))
        if i % 2 == 1:
            orientation = Orientation.REVERSING if rng.random() < 0.5 else Orientation.PRESERVING
            pairs.append(Pairing(f"e{i - 1}", f"e{i}", orientation))
    return DeckerDiagram(name, curves, tuple(edges), tuple(pairs), ())


__all__ = [
    "DeckerDiagram",
    "DiagramFile",
    "Edge",
    "EdgePoint",
    "Incidence",
    "Label",
    "Orientation",
    "Pairing",
    "TripleVertex",
    "ValidationReport",
    "Violation",
    "circle_curve",
    "diagram_json_schema",
    "parse_diagram",
    "random_circle_diagram",
    "reflect_diagram",
    "resample_diagram",
    "rotate_curve_start",
    "serialize_diagram",
    "strip_union",
    "tau",
    "transform_diagram",
    "validate",
]
