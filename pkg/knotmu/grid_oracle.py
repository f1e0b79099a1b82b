"""Dense-sampling recount of cycles of overcrossings.

Slow and independent of the exact per-cell solvers: every system is sampled
on a regular grid, sign-changing cells are bisected ``refinement_depth`` times
and surviving cells are grouped into connected components, one per solution.
Used by the test suites to cross-check the mu2 engine.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCE, Settings, Tolerance
from .decker_model import DeckerDiagram, Edge, EdgePoint, Label, tau
from .geom_core import PLCurve, PLFunction, Point2, VerticalHit, curve_track

logger = logging.getLogger("knotmu.grid_oracle")


@dataclass(frozen=True)
class GridConfig:
    resolution: int = 1024
    refinement_depth: int = 6

    def __post_init__(self) -> None:
        if self.resolution < 256 or self.resolution & (self.resolution - 1):
            raise ValueError(f"resolution must be a power of two >= 256, got {self.resolution}")
        if self.refinement_depth < 0:
            raise ValueError(f"refinement_depth must be >= 0, got {self.refinement_depth}")

    @classmethod
    def from_settings(cls, settings: Settings) -> "GridConfig":
        return cls(settings.grid_resolution, settings.grid_refinement_depth)

    @property
    def fine_step(self) -> float:
        return 1.0 / (self.resolution * 2**self.refinement_depth)


@dataclass(frozen=True)
class SolutionBox:
    s_lo: float
    s_hi: float
    t_lo: float
    t_hi: float

    @property
    def center(self) -> Tuple[float, float]:
        return 0.5 * (self.s_lo + self.s_hi), 0.5 * (self.t_lo + self.t_hi)

    def contains(self, s: float, t: float, slack: float = 0.0) -> bool:
        return self.s_lo - slack <= s <= self.s_hi + slack and self.t_lo - slack <= t <= self.t_hi + slack


@dataclass
class GridCount:
    """A brute-force count; ``inconclusive`` is set when a gate could not be decided."""

    count: int
    inconclusive: bool = False
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"count": self.count, "inconclusive": self.inconclusive, "notes": list(self.notes)}


def _changes(values: np.ndarray) -> np.ndarray:
    """Cells of a 2D sample grid whose four corners do not share a strict sign."""
    corners = np.stack([values[:-1, :-1], values[1:, :-1], values[:-1, 1:], values[1:, 1:]])
    return (corners.min(axis=0) <= 0.0) & (corners.max(axis=0) >= 0.0)


def _box_survives(
    fn: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]],
    s0: float,
    t0: float,
    size: float,
    depth: int,
) -> List[Tuple[float, float, float]]:
    """Finest sub-boxes of a cell in which both equations still change sign."""
    boxes = [(s0, t0, size)]
    for _ in range(depth):
        refined = []
        for bs, bt, bsize in boxes:
            half = 0.5 * bsize
            grid = np.array([0.0, half, bsize])
            ss, tt = np.meshgrid(bs + grid, bt + grid, indexing="ij")
            f, g = fn(ss, tt)
            both = _changes(f) & _changes(g)
            for i, j in zip(*np.nonzero(both)):
                refined.append((bs + i * half, bt + j * half, half))
        boxes = refined
        if not boxes:
            break
    return boxes


def _components(cells: Sequence[Tuple[int, int]]) -> List[List[Tuple[int, int]]]:
    remaining = set(cells)
    groups = []
    while remaining:
        start = remaining.pop()
        stack, group = [start], [start]
        while stack:
            i, j = stack.pop()
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    nb = (i + di, j + dj)
                    if nb in remaining:
                        remaining.remove(nb)
                        stack.append(nb)
                        group.append(nb)
        groups.append(group)
    return groups


def brute_pair_solutions(
    u: PLFunction, v: PLFunction, w: PLFunction, z: PLFunction, cfg: GridConfig = GridConfig()
) -> List[SolutionBox]:
    """Boxes containing the solutions of u(t) - v(s) = 0, w(s) - z(t) = 0 on [0, 1]^2."""
    n = cfg.resolution
    grid = np.linspace(0.0, 1.0, n + 1)
    f = u(grid)[None, :] - v(grid)[:, None]
    g = w(grid)[:, None] - z(grid)[None, :]
    candidates = np.argwhere(_changes(f) & _changes(g))

    def fn(ss: np.ndarray, tt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return u(tt) - v(ss), w(ss) - z(tt)

    survivors: Dict[Tuple[int, int], List[Tuple[float, float, float]]] = {}
    step = 1.0 / n
    for i, j in candidates:
        fine = _box_survives(fn, i * step, j * step, step, cfg.refinement_depth)
        if fine:
            survivors[(int(i), int(j))] = fine
    boxes = []
    for group in _components(list(survivors)):
        fine = [b for cell in group for b in survivors[cell]]
        boxes.append(
            SolutionBox(
                s_lo=min(b[0] for b in fine),
                s_hi=max(b[0] + b[2] for b in fine),
                t_lo=min(b[1] for b in fine),
                t_hi=max(b[1] + b[2] for b in fine),
            )
        )
    boxes.sort(key=lambda b: b.center)
    logger.debug("Grid %d: %d candidate cells, %d solution boxes", n, len(candidates), len(boxes))
    return boxes


def _univariate_roots(h: Callable[[np.ndarray], np.ndarray], samples: int, depth: int) -> List[Tuple[float, bool]]:
    """Roots of h on [0, 1] as (estimate, flat) with flat set for long zero runs."""
    grid = np.linspace(0.0, 1.0, samples + 1)
    vals = h(grid)
    cells = np.nonzero(np.minimum(vals[:-1], vals[1:]) <= 0.0)[0]
    cells = cells[np.maximum(vals[:-1], vals[1:])[cells] >= 0.0]
    roots: List[Tuple[float, bool]] = []
    run: List[int] = []
    for c in list(cells) + [None]:
        if c is not None and run and c == run[-1] + 1:
            run.append(int(c))
            continue
        if run:
            lo, hi = grid[run[0]], grid[run[-1] + 1]
            if len(run) <= 2:
                a, b = lo, hi
                fa = float(h(np.array([a]))[0])
                for _ in range(depth + 8):
                    mid = 0.5 * (a + b)
                    fm = float(h(np.array([mid]))[0])
                    if fa * fm <= 0.0:
                        b = mid
                    else:
                        a, fa = mid, fm
                roots.append((0.5 * (a + b), False))
            else:
                roots.append((0.5 * (lo + hi), True))
        run = [int(c)] if c is not None else []
    return roots


def brute_vertical_hits(
    curves: Sequence[Tuple[PLCurve, Any]],
    x: float,
    y_low: float,
    y_high: float,
    cfg: GridConfig = GridConfig(),
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> List[VerticalHit]:
    """Dense scan of each curve's x1 track for crossings of the vertical segment."""
    if not y_low < y_high:
        raise ValueError(f"brute_vertical_hits needs y_low < y_high, got {y_low} >= {y_high}")
    samples = cfg.resolution * 16
    hits: List[VerticalHit] = []
    for index, (curve, label) in enumerate(curves):
        xs = curve_track(curve, 0.0, 1.0, 0)
        ys = curve_track(curve, 0.0, 1.0, 1)
        for t, flat in _univariate_roots(lambda lam: xs(lam) - x, samples, cfg.refinement_depth):
            y = float(ys(t))
            if not (y_low + tol.sep_tol < y < y_high - tol.sep_tol):
                continue
            if curve.closed and t >= 1.0 - cfg.fine_step:
                t = 0.0 if t >= 1.0 else t
                if any(h.curve_index == index and min(h.t, 1.0 - h.t) < cfg.fine_step for h in hits):
                    continue
            hits.append(VerticalHit(index, float(t), Point2(x, y), near_vertex=flat, label=label))
    hits.sort(key=lambda h: (h.curve_index, h.t))
    return hits


# ------------------------------
# Cycle recounts
# ------------------------------
def _at(diagram: DeckerDiagram, edge: Edge, lam: float) -> Tuple[EdgePoint, Point2]:
    p = EdgePoint(edge.id, diagram.edge_param(edge, min(max(lam, 0.0), 1.0)))
    return p, diagram.point(p)


def _partner(diagram: DeckerDiagram, p: EdgePoint) -> Tuple[EdgePoint, Point2]:
    q = tau(diagram, p)
    return q, diagram.point(q)


def _min_distance(points: Sequence[Point2]) -> float:
    return min(points[i].distance(points[j]) for i in range(len(points)) for j in range(i + 1, len(points)))


def _edge_speed(diagram: DeckerDiagram) -> float:
    """Largest planar distance covered per unit of edge fraction."""
    speed = 0.0
    for edge in diagram.edges:
        curve = diagram.curves[edge.curve]
        pts = curve.points
        nxt = np.roll(pts, -1, axis=0) if curve.closed else pts[1:]
        base = pts if curve.closed else pts[:-1]
        longest = float(np.linalg.norm(nxt - base, axis=1).max())
        speed = max(speed, edge.length * curve.n_segments * longest)
    return speed


@dataclass(frozen=True)
class _Gates:
    """Distances below ``tight`` are coincidences within box precision; up to ``radius`` they are undecided."""

    tight: float
    radius: float

    @classmethod
    def build(cls, diagram: DeckerDiagram, cfg: GridConfig, tol: Tolerance) -> "_Gates":
        tight = max(tol.sep_tol, 4.0 * cfg.fine_step * _edge_speed(diagram))
        return cls(tight, max(tight, 64.0 * cfg.fine_step))


def brute_four_cycles(
    diagram: DeckerDiagram, cfg: GridConfig = GridConfig(), tol: Tolerance = DEFAULT_TOLERANCE
) -> GridCount:
    """Reversal orbits of 4-cycles, recounted from grid solution boxes."""
    result = GridCount(0)
    overs = diagram.over_edges()
    order = {e.id: i for i, e in enumerate(overs)}
    gates = _Gates.build(diagram, cfg, tol)
    for e1 in overs:
        v, w = diagram.edge_track(e1, 0), diagram.partner_track(e1, 0)
        for e2 in overs:
            z, u = diagram.edge_track(e2, 0), diagram.partner_track(e2, 0)
            for box in brute_pair_solutions(u, v, w, z, cfg):
                s, t = box.center
                p1, xy1 = _at(diagram, e1, s)
                p4, xy4 = _at(diagram, e2, t)
                _, xy3 = _partner(diagram, p1)
                _, xy2 = _partner(diagram, p4)
                where = f"{e1.id}@{s:.6f}, {e2.id}@{t:.6f}"
                apart = _min_distance((xy1, xy2, xy3, xy4))
                if apart < gates.tight:
                    continue
                if apart < gates.radius:
                    result.inconclusive = True
                    result.notes.append(f"separation {apart:.3g} undecided for {where}")
                    continue
                gaps = (xy2.x2 - xy1.x2, xy3.x2 - xy4.x2)
                if min(abs(g) for g in gaps) <= gates.radius:
                    result.inconclusive = True
                    result.notes.append(f"gate undecided for {where}")
                    continue
                if min(gaps) <= 0:
                    continue
                if (order[e1.id], s) < (order[e2.id], t):
                    result.count += 1
    return result


def brute_two_cycles(
    diagram: DeckerDiagram, cfg: GridConfig = GridConfig(), tol: Tolerance = DEFAULT_TOLERANCE
) -> GridCount:
    """2-cycles recounted by univariate scans and dense vertical scans."""
    result = GridCount(0)
    gates = _Gates.build(diagram, cfg, tol)
    under_curves = sorted({e.curve for e in diagram.under_edges()})
    query = [(diagram.curves[cid], cid) for cid in under_curves]
    for edge in diagram.over_edges():
        f, g = diagram.edge_track(edge, 0), diagram.partner_track(edge, 0)
        for lam, flat in _univariate_roots(lambda x: f(x) - g(x), cfg.resolution, cfg.refinement_depth):
            p4, xy4 = _at(diagram, edge, lam)
            _, xy2 = _partner(diagram, p4)
            if xy2.distance(xy4) < gates.tight:
                continue
            if flat:
                result.inconclusive = True
                result.notes.append(f"flat root on {edge.id}")
                continue
            rise = xy2.x2 - xy4.x2
            if abs(rise) <= gates.radius:
                result.inconclusive = True
                result.notes.append(f"vertical gap {rise:.3g} undecided on {edge.id}@{lam:.6f}")
                continue
            if rise < 0:
                continue
            x = 0.5 * (xy2.x1 + xy4.x1)
            for hit in brute_vertical_hits(query, x, xy4.x2, xy2.x2, cfg, tol):
                under = next(
                    (e for e in diagram.edges_on(hit.label) if e.label is Label.UNDER and e.contains(hit.t)), None
                )
                if under is None:
                    continue
                p3 = EdgePoint(under.id, hit.t)
                _, xy1 = _partner(diagram, p3)
                apart = _min_distance((xy1, xy2, hit.point, xy4))
                if apart < gates.tight:
                    continue
                if apart < gates.radius:
                    result.inconclusive = True
                    where = f"{edge.id}@{lam:.6f}, {under.id}@{hit.t:.6f}"
                    result.notes.append(f"separation {apart:.3g} undecided for {where}")
                    continue
                result.count += 1
    return result


__all__ = [
    "GridConfig",
    "GridCount",
    "SolutionBox",
    "brute_four_cycles",
    "brute_pair_solutions",
    "brute_two_cycles",
    "brute_vertical_hits",
]
