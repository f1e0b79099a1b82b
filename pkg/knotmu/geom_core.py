"""Planar piecewise-linear primitives.

Curves live in the unit disk with coordinates (x1, x2); "up" means larger x2.
A curve with n segments is parameterized uniformly per vertex: vertex i sits
at t = i/n and points in between are linear interpolations.

The alignment systems of the cycle engines reduce to

    u(t) - v(s) = 0,    w(s) - z(t) = 0

for piecewise-linear tracks u, v, w, z, which ``solve_separable_pair`` solves
exactly cell by cell.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCE, Tolerance
from .errors import ParameterDomainError

logger = logging.getLogger("knotmu.geom_core")

# Inclusion slack for per-cell roots, in units of the cell width.
_CELL_SLACK = 1e-12


@dataclass(frozen=True)
class Point2:
    x1: float
    x2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError(f"Point2 coordinates must be finite, got ({self.x1}, {self.x2})")

    def distance(self, other: "Point2") -> float:
        return math.hypot(self.x1 - other.x1, self.x2 - other.x2)

    def norm(self) -> float:
        return math.hypot(self.x1, self.x2)

    def as_list(self) -> List[float]:
        return [self.x1, self.x2]


@dataclass(frozen=True)
class PLCurve:
    """Closed polygon (>= 3 vertices) or open arc (>= 2 vertices)."""

    vertices: Tuple[Tuple[float, float], ...]
    closed: bool = True

    def __post_init__(self) -> None:
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        minimum = 3 if self.closed else 2
        if len(verts) < minimum:
            kind = "closed curve" if self.closed else "arc"
            raise ValueError(f"A {kind} needs at least {minimum} vertices, got {len(verts)}")

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def n_segments(self) -> int:
        return len(self.vertices) if self.closed else len(self.vertices) - 1

    def vertex_parameter(self, index: int) -> float:
        return index / self.n_segments

    def segment_endpoints(self, k: int) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        n = len(self.vertices)
        return self.vertices[k], self.vertices[(k + 1) % n]

    def locate(self, t: float) -> Tuple[int, float]:
        """Return (segment index, local fraction) for parameter t."""
        scaled = t * self.n_segments
        k = int(math.floor(scaled))
        if k >= self.n_segments:
            k = self.n_segments - 1
        return k, scaled - k

    def near_vertex(self, t: float, endpoint_tol: float) -> bool:
        scaled = t * self.n_segments
        return abs(scaled - round(scaled)) / self.n_segments <= endpoint_tol

    def to_list(self) -> List[List[float]]:
        return [[x, y] for x, y in self.vertices]


@dataclass(frozen=True)
class PLFunction:
    """Univariate piecewise-linear function on [0, 1] given by breakpoints."""

    ts: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.ts) != len(self.values) or len(self.ts) < 2:
            raise ValueError("PLFunction needs at least two (t, value) breakpoints")
        if any(b <= a for a, b in zip(self.ts, self.ts[1:])):
            raise ValueError("PLFunction breakpoints must be strictly increasing")

    @classmethod
    def from_breakpoints(cls, breakpoints: Iterable[Tuple[float, float]]) -> "PLFunction":
        pairs = list(breakpoints)
        return cls(tuple(float(t) for t, _ in pairs), tuple(float(v) for _, v in pairs))

    def __call__(self, t: Any) -> Any:
        return np.interp(t, self.ts, self.values)

    @property
    def breakpoints(self) -> List[Tuple[float, float]]:
        return list(zip(self.ts, self.values))


@dataclass(frozen=True)
class PairSolution:
    s: float
    t: float
    singular: bool
    residuals: Tuple[float, float] = (0.0, 0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {"s": self.s, "t": self.t, "singular": self.singular, "residuals": list(self.residuals)}


@dataclass(frozen=True)
class VerticalHit:
    curve_index: int
    t: float
    point: Point2
    near_vertex: bool = False
    label: Any = None


# ------------------------------
# Curve evaluation
# ------------------------------
def eval_curve(curve: PLCurve, t: float) -> Point2:
    """Linear interpolation on the segment containing t."""
    upper_ok = (t <= 1.0) if not curve.closed else (t < 1.0)
    if not (t >= 0.0 and upper_ok):
        domain = "[0, 1)" if curve.closed else "[0, 1]"
        raise ParameterDomainError(f"Curve parameter {t!r} outside {domain}")
    k, frac = curve.locate(t)
    (ax, ay), (bx, by) = curve.segment_endpoints(k)
    return Point2(ax + frac * (bx - ax), ay + frac * (by - ay))


def eval_curve_wrapped(curve: PLCurve, t: float) -> Point2:
    """Like ``eval_curve`` but reduces t modulo 1 on closed curves."""
    if curve.closed:
        t = t % 1.0
        if t >= 1.0:
            t = 0.0
    return eval_curve(curve, t)


def curve_track(
    curve: PLCurve,
    t_start: float,
    length: float,
    axis: int,
    reverse: bool = False,
) -> PLFunction:
    """Coordinate ``axis`` of curve(t_start + length*lam) as a PL function of lam.

    With ``reverse`` the track is read backwards (lam -> 1 - lam), which is how
    an orientation-reversing correspondence is expressed.
    """
    n = curve.n_segments
    lams = [0.0, 1.0]
    first = math.floor(t_start * n) + 1
    last = math.ceil((t_start + length) * n) - 1
    for j in range(first, last + 1):
        lam = (j / n - t_start) / length
        if 0.0 < lam < 1.0:
            lams.append(lam)
    lams = sorted(set(lams))
    values = [getattr(eval_curve_wrapped(curve, t_start + length * lam), "x1" if axis == 0 else "x2") for lam in lams]
    if reverse:
        lams = [1.0 - lam for lam in reversed(lams)]
        values = list(reversed(values))
    return PLFunction(tuple(lams), tuple(values))


def segments_as_array(curve: PLCurve) -> Tuple[np.ndarray, np.ndarray]:
    pts = curve.points
    if curve.closed:
        return pts, np.roll(pts, -1, axis=0)
    return pts[:-1], pts[1:]


def vertical_segments(curve: PLCurve, eq_tol: float = DEFAULT_TOLERANCE.eq_tol) -> List[int]:
    """Indices of segments whose endpoints share x1 (they create solution continua)."""
    a, b = segments_as_array(curve)
    return [int(k) for k in np.nonzero(np.abs(b[:, 0] - a[:, 0]) <= eq_tol)[0]]


def _segments_cross(p, q, r, s, sep_tol: float) -> bool:
    d1 = np.subtract(q, p)
    d2 = np.subtract(s, r)
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) <= 1e-15:
        return False
    diff = np.subtract(r, p)
    a = (diff[0] * d2[1] - diff[1] * d2[0]) / denom
    b = (diff[0] * d1[1] - diff[1] * d1[0]) / denom
    return -sep_tol < a < 1 + sep_tol and -sep_tol < b < 1 + sep_tol


def segment_distance(p, q, r, s) -> float:
    """Minimum distance between planar segments pq and rs."""
    if _segments_cross(p, q, r, s, 0.0):
        return 0.0

    def point_seg(x, a, b) -> float:
        a = np.asarray(a, dtype=float)
        ab = np.asarray(b, dtype=float) - a
        denom = float(ab @ ab)
        lam = 0.0 if denom == 0 else float(np.clip((np.asarray(x) - a) @ ab / denom, 0.0, 1.0))
        return float(np.linalg.norm(np.asarray(x) - (a + lam * ab)))

    return min(point_seg(p, r, s), point_seg(q, r, s), point_seg(r, p, q), point_seg(s, p, q))


def self_intersections(curve: PLCurve, sep_tol: float) -> List[Tuple[int, int]]:
    """Pairs of non-adjacent segments closer than sep_tol."""
    a, b = segments_as_array(curve)
    m = len(a)
    lo = np.minimum(a, b) - sep_tol
    hi = np.maximum(a, b) + sep_tol
    found: List[Tuple[int, int]] = []
    for i in range(m):
        overlap = np.all((lo[i] <= hi) & (lo <= hi[i]), axis=1)
        for j in np.nonzero(overlap)[0]:
            j = int(j)
            if j <= i + 1:
                continue
            if curve.closed and i == 0 and j == m - 1:
                continue
            if segment_distance(a[i], b[i], a[j], b[j]) < sep_tol:
                found.append((i, j))
    return found


# ------------------------------
# Separable solver
# ------------------------------
def _cell_arrays(f: PLFunction, g: PLFunction) -> Tuple[np.ndarray, ...]:
    grid = np.unique(np.concatenate([np.asarray(f.ts), np.asarray(g.ts)]))
    lo, hi = grid[:-1], grid[1:]
    width = hi - lo
    f_lo, f_hi = f(lo), f(hi)
    g_lo, g_hi = g(lo), g(hi)
    return lo, width, f_lo, (f_hi - f_lo) / width, g_lo, (g_hi - g_lo) / width


def _clip_line_to_box(a: float, b: float, c: float, ds: float, dt: float) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Segment of {a*x + b*y + c = 0} inside [0, ds] x [0, dt], or None."""
    pts: List[Tuple[float, float]] = []
    if abs(b) > 0:
        for x in (0.0, ds):
            y = -(a * x + c) / b
            if -_CELL_SLACK * dt <= y <= dt * (1 + _CELL_SLACK):
                pts.append((x, min(max(y, 0.0), dt)))
    if abs(a) > 0:
        for y in (0.0, dt):
            x = -(b * y + c) / a
            if -_CELL_SLACK * ds <= x <= ds * (1 + _CELL_SLACK):
                pts.append((min(max(x, 0.0), ds), y))
    if not pts:
        return None
    arr = np.asarray(pts)
    return arr.min(axis=0), arr.max(axis=0)


def solve_separable_pair(
    u: PLFunction,
    v: PLFunction,
    w: PLFunction,
    z: PLFunction,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> List[PairSolution]:
    """All (s, t) with u(t) = v(s) and w(s) = z(t), sorted by (s, t).

    Each (s-cell, t-cell) pair carries an exact 2x2 linear system. Cells whose
    determinant is below eq_tol report one representative point with
    ``singular=True`` when their solution set is non-empty.
    """
    s_lo, s_w, v0, vs, w0, ws = _cell_arrays(v, w)
    t_lo, t_w, u0, ut, z0, zt = _cell_arrays(u, z)

    # Local coordinates sigma = s - s_lo, tau = t - t_lo:
    #   F = -vs*sigma + ut*tau + (u0 - v0)
    #   G =  ws*sigma - zt*tau + (w0 - z0)
    a = -vs[:, None] * np.ones_like(ut)[None, :]
    b = ut[None, :] * np.ones_like(vs)[:, None]
    c = ws[:, None] * np.ones_like(zt)[None, :]
    d = -zt[None, :] * np.ones_like(ws)[:, None]
    r1 = v0[:, None] - u0[None, :]
    r2 = z0[None, :] - w0[:, None]
    det = a * d - b * c

    solutions: List[PairSolution] = []
    regular = np.abs(det) > tol.eq_tol
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma = np.where(regular, (d * r1 - b * r2) / det, np.nan)
        tau = np.where(regular, (a * r2 - c * r1) / det, np.nan)
    sw = s_w[:, None]
    tw = t_w[None, :]
    inside = (
        regular
        & (sigma >= -_CELL_SLACK * sw)
        & (sigma <= sw * (1 + _CELL_SLACK))
        & (tau >= -_CELL_SLACK * tw)
        & (tau <= tw * (1 + _CELL_SLACK))
    )
    for i, j in zip(*np.nonzero(inside)):
        s = float(s_lo[i] + min(max(sigma[i, j], 0.0), s_w[i]))
        t = float(t_lo[j] + min(max(tau[i, j], 0.0), t_w[j]))
        solutions.append(_make_solution(u, v, w, z, s, t, singular=False))

    for i, j in zip(*np.nonzero(~regular)):
        rep = _singular_cell_point(a[i, j], b[i, j], c[i, j], d[i, j], r1[i, j], r2[i, j], s_w[i], t_w[j], tol)
        if rep is None:
            continue
        s = float(s_lo[i] + rep[0])
        t = float(t_lo[j] + rep[1])
        solutions.append(_make_solution(u, v, w, z, s, t, singular=True))

    return _dedupe(solutions)


def _singular_cell_point(a, b, c, d, r1, r2, ds, dt, tol: Tolerance) -> Optional[Tuple[float, float]]:
    """Representative point of a degenerate cell's solution set, if any."""
    row1 = math.hypot(a, b)
    row2 = math.hypot(c, d)
    if row1 <= tol.eq_tol and row2 <= tol.eq_tol:
        if abs(r1) <= tol.eq_tol and abs(r2) <= tol.eq_tol:
            return ds / 2.0, dt / 2.0
        return None
    # Line of the dominant equation, then test the other one along it.
    if row1 >= row2:
        la, lb, lc = a, b, -r1
        oa, ob, oc = c, d, -r2
    else:
        la, lb, lc = c, d, -r2
        oa, ob, oc = a, b, -r1
    clipped = _clip_line_to_box(la, lb, lc, ds, dt)
    if clipped is None:
        return None
    p, q = clipped
    gp = oa * p[0] + ob * p[1] + oc
    gq = oa * q[0] + ob * q[1] + oc
    if min(abs(gp), abs(gq)) <= tol.eq_tol or gp * gq < 0:
        mid = (p + q) / 2.0
        return float(mid[0]), float(mid[1])
    return None


def _make_solution(u, v, w, z, s: float, t: float, singular: bool) -> PairSolution:
    res = (float(abs(u(t) - v(s))), float(abs(w(s) - z(t))))
    return PairSolution(s=s, t=t, singular=singular, residuals=res)


def _dedupe(solutions: List[PairSolution], radius: float = 1e-9) -> List[PairSolution]:
    ordered = sorted(solutions, key=lambda sol: (sol.s, sol.t, sol.singular))
    kept: List[PairSolution] = []
    for sol in ordered:
        duplicate = False
        for prev in kept[-8:]:
            if abs(prev.s - sol.s) <= radius and abs(prev.t - sol.t) <= radius:
                duplicate = True
                break
        if not duplicate:
            kept.append(sol)
    return kept


def solve_univariate(f: PLFunction, g: PLFunction, tol: Tolerance = DEFAULT_TOLERANCE) -> List[Tuple[float, bool]]:
    """Roots of f(x) = g(x) on [0, 1] as (x, flat_flag) pairs, sorted."""
    lo, width, f0, fs, g0, gs = _cell_arrays(f, g)
    h0 = f0 - g0
    hs = fs - gs
    roots: List[Tuple[float, bool]] = []
    for k in range(len(lo)):
        if abs(hs[k]) * width[k] <= tol.eq_tol:
            if abs(h0[k]) <= tol.eq_tol:
                roots.append((float(lo[k] + width[k] / 2.0), True))
            continue
        x = -h0[k] / hs[k]
        if -_CELL_SLACK * width[k] <= x <= width[k] * (1 + _CELL_SLACK):
            roots.append((float(lo[k] + min(max(x, 0.0), width[k])), False))
    roots.sort()
    kept: List[Tuple[float, bool]] = []
    for root in roots:
        if kept and abs(kept[-1][0] - root[0]) <= 1e-12:
            continue
        kept.append(root)
    return kept


# ------------------------------
# Vertical queries
# ------------------------------
def vertical_hits(
    curves: Sequence[Tuple[PLCurve, Any]],
    x: float,
    y_low: float,
    y_high: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> List[VerticalHit]:
    """Crossings of the open vertical segment {x} x (y_low, y_high) with the curves.

    Hits within endpoint_tol (in parameter) of a curve vertex are flagged.
    """
    if not y_low < y_high:
        raise ValueError(f"vertical_hits needs y_low < y_high, got {y_low} >= {y_high}")
    hits: List[VerticalHit] = []
    for index, (curve, label) in enumerate(curves):
        a, b = segments_as_array(curve)
        dx = b[:, 0] - a[:, 0]
        n = curve.n_segments
        side_a = a[:, 0] - x
        side_b = b[:, 0] - x
        candidates = np.nonzero((side_a * side_b <= 0) & (np.abs(dx) > 0))[0]
        seen: List[float] = []
        for k in candidates:
            lam = float((x - a[k, 0]) / dx[k])
            lam = min(max(lam, 0.0), 1.0)
            y = float(a[k, 1] + lam * (b[k, 1] - a[k, 1]))
            if not (y_low + tol.sep_tol < y < y_high - tol.sep_tol):
                continue
            t = (int(k) + lam) / n
            if t >= 1.0 and curve.closed:
                t -= 1.0
            if any(abs(t - prev) <= 1e-12 or abs(abs(t - prev) - 1.0) <= 1e-12 for prev in seen):
                continue
            seen.append(t)
            near = min(lam, 1.0 - lam) / n <= tol.endpoint_tol
            hits.append(VerticalHit(curve_index=index, t=t, point=Point2(x, y), near_vertex=near, label=label))
        # Segments lying on the query line are reported as flagged hits.
        for k in np.nonzero((np.abs(dx) == 0) & (np.abs(side_a) <= tol.eq_tol))[0]:
            lo_y, hi_y = sorted((float(a[k, 1]), float(b[k, 1])))
            if hi_y > y_low and lo_y < y_high:
                y = min(max((lo_y + hi_y) / 2.0, y_low), y_high)
                hits.append(VerticalHit(curve_index=index, t=(int(k) + 0.5) / n, point=Point2(x, y), near_vertex=True, label=label))
    hits.sort(key=lambda h: (h.curve_index, h.t))
    return hits


# ------------------------------
# Deterministic perturbation
# ------------------------------
def hash_offset(seed: int, key: str, index: int, magnitude: float) -> Tuple[float, float]:
    """Offset of norm <= magnitude derived from blake2b("{seed}|{key}|{index}").

    The first 8 digest bytes pick the angle, the next 8 the radius
    (square-root scaled, so offsets are uniform over the disk).
    """
    if magnitude <= 0:
        return 0.0, 0.0
    digest = hashlib.blake2b(f"{seed}|{key}|{index}".encode("utf-8"), digest_size=16).digest()
    a = int.from_bytes(digest[:8], "big") / 2.0**64
    b = int.from_bytes(digest[8:], "big") / 2.0**64
    angle = 2.0 * math.pi * a
    radius = magnitude * math.sqrt(b)
    return radius * math.cos(angle), radius * math.sin(angle)


def _clamp_to_disk(p: Tuple[float, float], offset: Tuple[float, float]) -> Tuple[float, float]:
    qx, qy = p[0] + offset[0], p[1] + offset[1]
    if qx * qx + qy * qy <= 1.0 or (p[0] * p[0] + p[1] * p[1]) > 1.0:
        return qx, qy
    # Largest c in [0, 1] with |p + c*offset| <= 1.
    ox, oy = offset
    aa = ox * ox + oy * oy
    bb = 2.0 * (p[0] * ox + p[1] * oy)
    cc = p[0] * p[0] + p[1] * p[1] - 1.0
    disc = max(bb * bb - 4.0 * aa * cc, 0.0)
    c = max(0.0, min(1.0, (-bb + math.sqrt(disc)) / (2.0 * aa)))
    return p[0] + c * ox, p[1] + c * oy


def perturb_diagram(diagram: Any, seed: int, magnitude: float) -> Any:
    """Displace every curve vertex by a hashed offset of norm <= magnitude.

    Vertices carrying a triple-vertex incidence share one offset keyed by the
    triple vertex, so the three branches keep meeting in a single point. An
    incidence inside a segment gives both segment ends that shared offset, which
    translates the segment and the incidence point with it. Triple vertices
    competing for a vertex are merged onto one key.
    Combinatorial data (edges, pairings, incidences) is untouched.
    """
    if magnitude < 0:
        raise ValueError(f"magnitude must be >= 0, got {magnitude}")
    if magnitude == 0:
        return diagram
    tol = getattr(diagram, "tolerance", DEFAULT_TOLERANCE)
    shared: Dict[Tuple[str, int], str] = {}
    merged: Dict[str, str] = {}

    def root(key: str) -> str:
        while merged.get(key, key) != key:
            key = merged[key]
        return key

    def claim(vertex: Tuple[str, int], key: str) -> None:
        held = shared.setdefault(vertex, key)
        if root(held) != root(key):
            merged[root(key)] = root(held)

    for tv in getattr(diagram, "triple_vertices", ()):
        for inc in tv.incident:
            curve = diagram.curves.get(inc.curve)
            if curve is None:
                continue
            scaled = inc.t * curve.n_segments
            count = len(curve.vertices)
            if abs(scaled - round(scaled)) / curve.n_segments <= tol.endpoint_tol:
                claim((inc.curve, int(round(scaled)) % count), f"tv:{tv.id}")
            else:
                k = int(math.floor(scaled))
                claim((inc.curve, k % count), f"tv:{tv.id}")
                claim((inc.curve, (k + 1) % count), f"tv:{tv.id}")

    new_curves: Dict[str, PLCurve] = {}
    for curve_id, curve in diagram.curves.items():
        moved = []
        for idx, p in enumerate(curve.vertices):
            key = shared.get((curve_id, idx))
            if key is not None:
                offset = hash_offset(seed, root(key), 0, magnitude)
            else:
                offset = hash_offset(seed, curve_id, idx, magnitude)
            moved.append(_clamp_to_disk(p, offset))
        new_curves[curve_id] = PLCurve(tuple(moved), curve.closed)
    logger.debug("Perturbed %d curves (seed=%d, magnitude=%g)", len(new_curves), seed, magnitude)
    return diagram.with_curves(new_curves)


__all__ = [
    "PLCurve",
    "PLFunction",
    "PairSolution",
    "Point2",
    "VerticalHit",
    "curve_track",
    "eval_curve",
    "eval_curve_wrapped",
    "hash_offset",
    "perturb_diagram",
    "segment_distance",
    "self_intersections",
    "solve_separable_pair",
    "solve_univariate",
    "vertical_hits",
    "vertical_segments",
]
