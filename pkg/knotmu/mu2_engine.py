"""Parity of cycles of overcrossings on a decker diagram.

Two generic configurations are counted:

* a 4-cycle: p2 above p1 and p3 above p4 in the plane, with p3 = tau(p1) and
  p2 = tau(p4), where p1 and p4 lie on over edges;
* a 2-cycle: p2 = tau(p4) above p4, and an under point p3 strictly between
  them whose partner p1 = tau(p3) is distinct from the other three.

The reversal (p1, p2, p3, p4) -> (p4, p3, p2, p1) acts freely on ordered
4-cycles, so one representative per orbit is kept. mu is (n4 + n2) mod 2.
Configurations that are not transverse produce degeneracy events; ``mu2``
resolves them by deterministic perturbation.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCE, Settings, Tolerance
from .decker_model import DeckerDiagram, Edge, EdgePoint, Label, tau
from .errors import UnresolvedDegeneracyError
from .geom_core import Point2, perturb_diagram, solve_separable_pair, solve_univariate, vertical_hits, vertical_segments

logger = logging.getLogger("knotmu.mu2_engine")

# Degeneracy patterns. The first four mirror the non-generic vertical
# configurations; the rest are numerical.
CODOMAIN_TRIPLE_POINT = "codomain-triple-point"
DOMAIN_TRIPLE_ALIGNMENT = "domain-triple-alignment"
DOMAIN_QUADRUPLE_ALIGNMENT = "domain-quadruple-alignment"
SIMULTANEOUS_PAIRINGS = "simultaneous-pairings"
VERTICAL_SEGMENT = "vertical-segment"
CELL_BOUNDARY = "cell-boundary"
NEAR_COINCIDENCE = "near-coincidence"
SINGULAR_CELL = "singular-cell"

PATTERNS = (
    CODOMAIN_TRIPLE_POINT,
    DOMAIN_TRIPLE_ALIGNMENT,
    DOMAIN_QUADRUPLE_ALIGNMENT,
    SIMULTANEOUS_PAIRINGS,
    VERTICAL_SEGMENT,
    CELL_BOUNDARY,
    NEAR_COINCIDENCE,
    SINGULAR_CELL,
)


@dataclass(frozen=True)
class CyclePoint:
    at: EdgePoint
    xy: Point2

    def to_dict(self) -> Dict[str, Any]:
        return {"edge": self.at.edge, "t": self.at.t, "xy": self.xy.as_list()}


@dataclass(frozen=True)
class FourCycle:
    p1: CyclePoint
    p2: CyclePoint
    p3: CyclePoint
    p4: CyclePoint
    residuals: Tuple[float, float]
    orbit_id: str

    @property
    def points(self) -> Tuple[CyclePoint, ...]:
        return (self.p1, self.p2, self.p3, self.p4)

    def curves(self, diagram: DeckerDiagram) -> List[str]:
        return sorted({diagram.edge(p.at.edge).curve for p in self.points})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "orbit_id": self.orbit_id,
            "points": [p.to_dict() for p in self.points],
            "residuals": list(self.residuals),
        }


@dataclass(frozen=True)
class TwoCycle:
    p1: CyclePoint
    p2: CyclePoint
    p3: CyclePoint
    p4: CyclePoint
    residual: float

    @property
    def points(self) -> Tuple[CyclePoint, ...]:
        return (self.p1, self.p2, self.p3, self.p4)

    def to_dict(self) -> Dict[str, Any]:
        return {"points": [p.to_dict() for p in self.points], "residual": self.residual}


@dataclass(frozen=True)
class NearSolution:
    """A candidate that could not be certified as a transverse cycle."""

    kind: str  # "four" or "two"
    points: Tuple[CyclePoint, ...]
    singular: bool = False


@dataclass(frozen=True)
class DegeneracyEvent:
    pattern: str
    location: Dict[str, Any]
    trigger: float
    evidence: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"pattern": self.pattern, "location": self.location, "trigger": self.trigger, "evidence": self.evidence}


@dataclass(frozen=True)
class RetryRecord:
    seed: int
    magnitude: float
    events: int

    def to_dict(self) -> Dict[str, Any]:
        return {"seed": self.seed, "magnitude": self.magnitude, "events": self.events}


@dataclass
class MuResult:
    mu: int
    n4: int
    n2: int
    four_cycles: List[FourCycle] = field(default_factory=list)
    two_cycles: List[TwoCycle] = field(default_factory=list)
    degeneracies: List[DegeneracyEvent] = field(default_factory=list)
    retries: List[RetryRecord] = field(default_factory=list)
    raw_four: int = 0
    name: str = ""

    def to_dict(self, include_solutions: bool = True) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "name": self.name,
            "mu": self.mu,
            "n4": self.n4,
            "n2": self.n2,
            "raw_four": self.raw_four,
            "degeneracies": [e.to_dict() for e in self.degeneracies],
            "retries": [r.to_dict() for r in self.retries],
        }
        if include_solutions:
            data["four_cycles"] = [c.to_dict() for c in self.four_cycles]
            data["two_cycles"] = [c.to_dict() for c in self.two_cycles]
        return data


@dataclass
class StableMuResult:
    mu: int
    votes: Dict[int, int]
    trials: List[Dict[str, Any]]
    failed: List[int]
    result: MuResult

    @property
    def unanimous(self) -> bool:
        return len([v for v in self.votes.values() if v]) == 1 and not self.failed

    @property
    def unstable(self) -> bool:
        return not self.unanimous

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu": self.mu,
            "votes": {str(k): v for k, v in sorted(self.votes.items())},
            "unanimous": self.unanimous,
            "failed_seeds": self.failed,
            "trials": self.trials,
            "result": self.result.to_dict(include_solutions=False),
        }


@dataclass
class _Enumeration:
    four_cycles: List[FourCycle]
    raw_four: int
    two_cycles: List[TwoCycle]
    events: List[DegeneracyEvent]


# ------------------------------
# Helpers
# ------------------------------
def _cycle_point(diagram: DeckerDiagram, edge: Edge, lam: float) -> CyclePoint:
    at = EdgePoint(edge.id, diagram.edge_param(edge, lam))
    return CyclePoint(at, diagram.point(at))


def _image(diagram: DeckerDiagram, p: CyclePoint) -> CyclePoint:
    at = tau(diagram, p.at)
    return CyclePoint(at, diagram.point(at))


def _coincident(points: Sequence[CyclePoint], sep_tol: float) -> bool:
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if points[i].xy.distance(points[j].xy) < sep_tol:
                return True
    return False


def _near_boundary(diagram: DeckerDiagram, points: Sequence[CyclePoint], endpoint_tol: float) -> bool:
    return any(diagram.boundary_distance(p.at) < endpoint_tol for p in points)


def _x1_clusters(points: Sequence[CyclePoint], sep_tol: float) -> int:
    xs = sorted(p.xy.x1 for p in points)
    best = run = 1
    for a, b in zip(xs, xs[1:]):
        run = run + 1 if b - a <= sep_tol else 1
        best = max(best, run)
    return best


def classify_degeneracy(
    diagram: DeckerDiagram,
    near: NearSolution,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> DegeneracyEvent:
    """Match a flagged candidate against the non-generic vertical patterns.

    Precedence: a point at a triple vertex, then four or three points sharing
    an x1 coordinate, then a point on an edge boundary, then a singular cell,
    then coincident points.
    """
    location = {"kind": near.kind, "points": [p.to_dict() for p in near.points]}
    for p in near.points:
        curve = diagram.edge(p.at.edge).curve
        for tv in diagram.triple_vertices:
            for inc in tv.incident:
                if inc.curve == curve and min(abs(inc.t - p.at.t), 1.0 - abs(inc.t - p.at.t)) <= tol.endpoint_tol:
                    return DegeneracyEvent(
                        CODOMAIN_TRIPLE_POINT, location, tol.endpoint_tol, f"point on '{p.at.edge}' meets triple vertex '{tv.id}'"
                    )
    aligned = _x1_clusters(near.points, tol.sep_tol)
    if aligned >= 4:
        return DegeneracyEvent(DOMAIN_QUADRUPLE_ALIGNMENT, location, tol.sep_tol, "four points share one vertical line")
    expected = 3 if near.kind == "two" else 2
    if aligned > expected:
        return DegeneracyEvent(DOMAIN_TRIPLE_ALIGNMENT, location, tol.sep_tol, f"{aligned} points share one vertical line")
    for p in near.points:
        edge = diagram.edge(p.at.edge)
        if diagram.boundary_distance(p.at) < tol.endpoint_tol:
            pattern = CELL_BOUNDARY if diagram.at_arc_end(p.at, tol.endpoint_tol) else SIMULTANEOUS_PAIRINGS
            return DegeneracyEvent(pattern, location, tol.endpoint_tol, f"point at t={p.at.t:.9g} on boundary of '{edge.id}'")
    if near.singular:
        return DegeneracyEvent(SINGULAR_CELL, location, tol.eq_tol, "cell determinant below eq_tol")
    return DegeneracyEvent(NEAR_COINCIDENCE, location, tol.sep_tol, "points closer than sep_tol")


# ------------------------------
# Enumeration
# ------------------------------
def _four_cycles(diagram: DeckerDiagram, tol: Tolerance) -> Tuple[List[FourCycle], int, List[DegeneracyEvent]]:
    overs = diagram.over_edges()
    order = {e.id: i for i, e in enumerate(overs)}
    tracks = {e.id: (diagram.edge_track(e, 0), diagram.partner_track(e, 0)) for e in overs}
    cycles: List[FourCycle] = []
    events: List[DegeneracyEvent] = []
    raw = 0
    for e1 in overs:
        v, w = tracks[e1.id]
        for e2 in overs:
            z, u = tracks[e2.id]
            for sol in solve_separable_pair(u, v, w, z, tol):
                p1 = _cycle_point(diagram, e1, sol.s)
                p4 = _cycle_point(diagram, e2, sol.t)
                p3 = _image(diagram, p1)
                p2 = _image(diagram, p4)
                pts = (p1, p2, p3, p4)
                if _coincident(pts, tol.sep_tol):
                    continue
                if not (p2.xy.x2 > p1.xy.x2 + tol.sep_tol and p3.xy.x2 > p4.xy.x2 + tol.sep_tol):
                    continue
                if sol.singular or _near_boundary(diagram, pts, tol.endpoint_tol):
                    events.append(classify_degeneracy(diagram, NearSolution("four", pts, sol.singular), tol))
                    continue
                raw += 1
                j, k = order[e1.id], order[e2.id]
                if (j, sol.s) < (k, sol.t):
                    orbit = f"{e1.id}@{sol.s:.9f}|{e2.id}@{sol.t:.9f}"
                    cycles.append(FourCycle(p1, p2, p3, p4, sol.residuals, orbit))
    cycles.sort(key=lambda c: (c.p1.at.edge, c.p1.at.t, c.p4.at.edge, c.p4.at.t))
    return cycles, raw, events


def _two_cycles(diagram: DeckerDiagram, tol: Tolerance) -> Tuple[List[TwoCycle], List[DegeneracyEvent]]:
    unders = diagram.under_edges()
    under_curves = sorted({e.curve for e in unders})
    query = [(diagram.curves[cid], cid) for cid in under_curves]
    cycles: List[TwoCycle] = []
    events: List[DegeneracyEvent] = []
    for edge in diagram.over_edges():
        f = diagram.edge_track(edge, 0)
        g = diagram.partner_track(edge, 0)
        for lam, flat in solve_univariate(f, g, tol):
            p4 = _cycle_point(diagram, edge, lam)
            p2 = _image(diagram, p4)
            if p2.xy.distance(p4.xy) < tol.sep_tol:
                continue
            if not p2.xy.x2 > p4.xy.x2 + tol.sep_tol:
                continue
            if flat or _near_boundary(diagram, (p2, p4), tol.endpoint_tol):
                events.append(classify_degeneracy(diagram, NearSolution("two", (p2, p4), flat), tol))
                continue
            x = 0.5 * (p2.xy.x1 + p4.xy.x1)
            for hit in vertical_hits(query, x, p4.xy.x2, p2.xy.x2, tol):
                under = next(
                    (e for e in diagram.edges_on(hit.label) if e.label is Label.UNDER and e.contains(hit.t)),
                    None,
                )
                if under is None:
                    continue
                p3 = CyclePoint(EdgePoint(under.id, hit.t), hit.point)
                p1 = _image(diagram, p3)
                pts = (p1, p2, p3, p4)
                if _coincident(pts, tol.sep_tol):
                    continue
                if diagram.boundary_distance(p3.at) < tol.endpoint_tol:
                    events.append(classify_degeneracy(diagram, NearSolution("two", pts), tol))
                    continue
                residual = float(abs(p2.xy.x1 - p4.xy.x1))
                cycles.append(TwoCycle(p1, p2, p3, p4, residual))
    cycles.sort(key=lambda c: (c.p4.at.edge, c.p4.at.t, c.p3.at.edge, c.p3.at.t))
    return cycles, events


def _vertical_segment_events(diagram: DeckerDiagram, tol: Tolerance) -> List[DegeneracyEvent]:
    events = []
    for cid, curve in diagram.curves.items():
        for k in vertical_segments(curve, tol.eq_tol):
            events.append(
                DegeneracyEvent(VERTICAL_SEGMENT, {"curve": cid, "segment": k}, tol.eq_tol, f"segment {k} of '{cid}' is vertical")
            )
    return events


def _enumerate(diagram: DeckerDiagram, tol: Tolerance) -> _Enumeration:
    events = _vertical_segment_events(diagram, tol)
    if events:
        return _Enumeration([], 0, [], events)
    fours, raw, four_events = _four_cycles(diagram, tol)
    twos, two_events = _two_cycles(diagram, tol)
    if raw != 2 * len(fours):
        logger.warning("Unpaired ordered 4-cycle solutions on %s: raw=%d, orbits=%d", diagram.name, raw, len(fours))
    return _Enumeration(fours, raw, twos, four_events + two_events)


def find_four_cycles(diagram: DeckerDiagram, tol: Tolerance = DEFAULT_TOLERANCE) -> List[FourCycle]:
    """One representative per reversal orbit of transverse 4-cycles."""
    return _four_cycles(diagram, tol)[0]


def find_two_cycles(diagram: DeckerDiagram, tol: Tolerance = DEFAULT_TOLERANCE) -> List[TwoCycle]:
    return _two_cycles(diagram, tol)[0]


def find_degeneracies(diagram: DeckerDiagram, tol: Tolerance = DEFAULT_TOLERANCE) -> List[DegeneracyEvent]:
    return _enumerate(diagram, tol).events


def mu2(diagram: DeckerDiagram, settings: Optional[Settings] = None) -> MuResult:
    """Compute mu with perturb-and-retry on degeneracies.

    Retry i uses seed i and magnitude 10*endpoint_tol*2**(i-1).
    """
    settings = settings or Settings()
    tol = settings.tolerance
    run = _enumerate(diagram, tol)
    first_events = list(run.events)
    retries: List[RetryRecord] = []
    attempt = 0
    while run.events:
        if attempt >= settings.max_retries:
            raise UnresolvedDegeneracyError(
                f"{len(run.events)} degeneracies remain on {diagram.name} after {attempt} retries",
                events=first_events + run.events,
                retries=retries,
            )
        attempt += 1
        magnitude = 10.0 * tol.endpoint_tol * 2 ** (attempt - 1)
        logger.warning(
            "Degeneracies on %s (%s); retry %d with magnitude %.3g",
            diagram.name,
            ", ".join(sorted({e.pattern for e in run.events})),
            attempt,
            magnitude,
        )
        run = _enumerate(perturb_diagram(diagram, attempt, magnitude), tol)
        retries.append(RetryRecord(attempt, magnitude, len(run.events)))
    n4, n2 = len(run.four_cycles), len(run.two_cycles)
    logger.info("mu(%s) = %d (n4=%d, n2=%d)", diagram.name, (n4 + n2) % 2, n4, n2)
    return MuResult(
        mu=(n4 + n2) % 2,
        n4=n4,
        n2=n2,
        four_cycles=run.four_cycles,
        two_cycles=run.two_cycles,
        degeneracies=first_events,
        retries=retries,
        raw_four=run.raw_four,
        name=diagram.name,
    )


def stable_mu2(
    diagram: DeckerDiagram,
    trials: int = 101,
    settings: Optional[Settings] = None,
    magnitude: Optional[float] = None,
) -> StableMuResult:
    """Majority parity over ``trials`` perturbed copies (seeds 1..trials)."""
    if trials < 1 or trials % 2 == 0:
        raise ValueError(f"trials must be an odd integer >= 1, got {trials}")
    settings = settings or Settings()
    magnitude = settings.stable_magnitude if magnitude is None else magnitude
    votes: Counter = Counter()
    records: List[Dict[str, Any]] = []
    failed: List[int] = []
    results: Dict[int, MuResult] = {}
    last_error: Optional[UnresolvedDegeneracyError] = None
    for seed in range(1, trials + 1):
        try:
            result = mu2(perturb_diagram(diagram, seed, magnitude), settings)
        except UnresolvedDegeneracyError as exc:
            failed.append(seed)
            last_error = exc
            logger.warning("Trial seed=%d on %s unresolved: %s", seed, diagram.name, exc)
            continue
        votes[result.mu] += 1
        results.setdefault(result.mu, result)
        records.append({"seed": seed, "mu": result.mu, "n4": result.n4, "n2": result.n2})
    if not records:
        raise UnresolvedDegeneracyError(
            f"No stable trial completed on {diagram.name}",
            events=last_error.events if last_error else [],
            retries=last_error.retries if last_error else [],
        )
    if votes[0] == votes[1]:
        winner = records[0]["mu"]
    else:
        winner = 0 if votes[0] > votes[1] else 1
    stable = StableMuResult(winner, {0: votes[0], 1: votes[1]}, records, failed, results[winner])
    if stable.unstable:
        logger.warning("Unstable parity on %s: votes %s, failed %s", diagram.name, dict(votes), failed)
    return stable


# ------------------------------
# Vertical-walk heuristic
# ------------------------------
@dataclass(frozen=True)
class WalkCandidate:
    under_edge: str
    lam: float
    start: CyclePoint
    landing: CyclePoint
    gate_ok: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "under_edge": self.under_edge,
            "lam": self.lam,
            "start": self.start.to_dict(),
            "landing": self.landing.to_dict(),
            "gate_ok": self.gate_ok,
        }


def _walk_down(diagram: DeckerDiagram, query, p: CyclePoint, tol: Tolerance) -> Optional[CyclePoint]:
    hits = vertical_hits(query, p.xy.x1, -1.0 - tol.sep_tol, p.xy.x2, tol)
    best: Optional[CyclePoint] = None
    for hit in hits:
        edge = next(
            (e for e in diagram.edges_on(hit.label) if e.label is Label.OVER and e.contains(hit.t)),
            None,
        )
        if edge is None:
            continue
        if best is None or hit.point.x2 > best.xy.x2:
            best = CyclePoint(EdgePoint(edge.id, hit.t), hit.point)
    return best


def walk_candidates(
    diagram: DeckerDiagram,
    samples_per_edge: int = 64,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> List[WalkCandidate]:
    """Seeds for a by-hand 4-cycle search.

    From sample points p2 on each under edge, walk down to the first over
    point p1 and compare x1(tau(p1)) with x1(tau(p2)). Sign changes of that
    difference between neighbouring samples are reported. This never decides
    mu; ``find_four_cycles`` is exhaustive.
    """
    over_curves = sorted({e.curve for e in diagram.over_edges()})
    query = [(diagram.curves[cid], cid) for cid in over_curves]
    found: List[WalkCandidate] = []
    for edge in diagram.under_edges():
        prev: Optional[Tuple[float, float]] = None
        for lam in np.linspace(0.0, 1.0, samples_per_edge + 1)[1:-1]:
            p2 = _cycle_point(diagram, edge, float(lam))
            p1 = _walk_down(diagram, query, p2, tol)
            if p1 is None:
                prev = None
                continue
            p3 = _image(diagram, p1)
            p4 = _image(diagram, p2)
            gap = p3.xy.x1 - p4.xy.x1
            if prev is not None and prev[1] * gap <= 0:
                found.append(WalkCandidate(edge.id, float(lam), p2, p1, p3.xy.x2 > p4.xy.x2 + tol.sep_tol))
            prev = (float(lam), gap)
    logger.debug("walk_candidates(%s): %d seeds", diagram.name, len(found))
    return found


__all__ = [
    "PATTERNS",
    "CyclePoint",
    "DegeneracyEvent",
    "FourCycle",
    "MuResult",
    "NearSolution",
    "RetryRecord",
    "StableMuResult",
    "TwoCycle",
    "WalkCandidate",
    "classify_degeneracy",
    "find_degeneracies",
    "find_four_cycles",
    "find_two_cycles",
    "mu2",
    "stable_mu2",
    "walk_candidates",
]
