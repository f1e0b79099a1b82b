"""Alternating quadrisecants of polygonal long knots.

A long knot is a polygon whose first and last vertices sit on the x1-axis;
beyond them the knot continues along the axis to -inf and +inf. Those two
rays are represented by long segments (``ray_length_factor`` times the
bounding-box diameter) so every piece of the knot is a segment.

A quadrisecant meets the knot at p1 < p2 < p3 < p4 in knot order. It is
alternating when, along the line oriented from p1 to p2, the points appear as
p3, p1, p4, p2. The signed count of alternating quadrisecants is the type-2
invariant c2 of the knot.

Transversals of four segments are found in Pluecker coordinates. A line
X = (d, m) meets the line through A with direction D iff

    (A x D) . d + D . m = 0

so the four incidence rows span a 4x6 system whose 2-dimensional nullspace
F, G is intersected with the Pluecker quadric d . m = 0.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from rapidfuzz import process

from .config import Settings
from .errors import DegenerateConfigurationError, ParseError, UnresolvedDegeneracyError
from .geom_core import hash_offset

logger = logging.getLogger("knotmu.quadrisecant_engine")

Vec3 = Tuple[float, float, float]

PATTERN_ALTERNATING = "alternating"
PATTERN_OTHER = "non-alternating"

# Event kinds raised during a scan; any of them sends the knot to perturbation.
EVENT_RANK_DEFICIENT = "rank-deficient"
EVENT_IDENTICALLY_ZERO = "identically-zero"
EVENT_DOUBLE_ROOT = "double-root"
EVENT_ENDPOINT_HIT = "endpoint-hit"
EVENT_SINGULAR_JACOBIAN = "singular-jacobian"
EVENT_RESIDUAL = "residual"

_RANK_TOL = 1e-10
_QUAD_TOL = 1e-12
_DOUBLE_TOL = 1e-10
_PARALLEL_TOL = 1e-12
_CHUNK = 50_000

# Turning applied to the second summand of a connected sum, about the axis.
_CONNECT_TWIST = 1.0


# ------------------------------
# Knots
# ------------------------------
@dataclass(frozen=True)
class PolyKnot:
    """Polygonal knot in R^3, closed or long.

    Closed knots need at least 3 vertices; long knots need at least 2 and
    must start and end on the x1-axis.
    """

    vertices: Tuple[Vec3, ...]
    long: bool = False

    def __post_init__(self) -> None:
        verts = tuple(tuple(float(c) for c in v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        minimum = 2 if self.long else 3
        if len(verts) < minimum:
            kind = "long" if self.long else "closed"
            raise ValueError(f"A {kind} knot needs at least {minimum} vertices, got {len(verts)}")
        for v in verts:
            if len(v) != 3 or not all(math.isfinite(c) for c in v):
                raise ValueError(f"Knot vertices must be finite 3-vectors, got {v!r}")
        count = len(verts) if not self.long else len(verts) - 1
        for i in range(count):
            if verts[i] == verts[(i + 1) % len(verts)]:
                raise ValueError(f"Consecutive vertices {i} and {(i + 1) % len(verts)} coincide")
        if self.long:
            for end in (verts[0], verts[-1]):
                if abs(end[1]) > 1e-9 or abs(end[2]) > 1e-9:
                    raise ValueError(f"Long knot endpoints must lie on the x1-axis, got {end!r}")

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def diameter(self) -> float:
        pts = self.points
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))

    def to_dict(self) -> Dict[str, Any]:
        return {"long": self.long, "vertices": [list(v) for v in self.vertices]}


def parse_knot(text: str) -> PolyKnot:
    """Parse the polygonal knot format.

    Lines starting with '#' are comments. The first content line may be the
    header ``closed`` or ``long`` (default closed); every other line is an
    ``x y z`` triple.
    """
    long = False
    header_seen = False
    vertices: List[Vec3] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if not header_seen and not vertices and len(parts) == 1 and not _is_number(parts[0]):
            word = parts[0].lower()
            if word not in ("closed", "long"):
                match = process.extractOne(word, ["closed", "long"], score_cutoff=60)
                raise ParseError(
                    f"unknown header {parts[0]!r}",
                    line=lineno,
                    field="header",
                    suggestion=match[0] if match else None,
                )
            long = word == "long"
            header_seen = True
            continue
        if len(parts) != 3:
            raise ParseError(f"expected 'x y z', got {len(parts)} fields", line=lineno, field="vertex")
        try:
            vertex = tuple(float(p) for p in parts)
        except ValueError:
            raise ParseError(f"non-numeric coordinate in {line!r}", line=lineno, field="vertex") from None
        if not all(math.isfinite(c) for c in vertex):
            raise ParseError("coordinates must be finite", line=lineno, field="vertex")
        vertices.append(vertex)  # type: ignore[arg-type]
    try:
        return PolyKnot(tuple(vertices), long=long)
    except ValueError as e:
        raise ParseError(str(e), field="vertices") from e


def serialize_knot(knot: PolyKnot, comment: Optional[str] = None) -> str:
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append("long" if knot.long else "closed")
    lines.extend(f"{x:.9f} {y:.9f} {z:.9f}" for x, y, z in knot.vertices)
    return "\n".join(lines) + "\n"


def _is_number(word: str) -> bool:
    try:
        float(word)
    except ValueError:
        return False
    return True


def _on_axis(p: Sequence[float], tol: float) -> bool:
    return abs(p[1]) <= tol and abs(p[2]) <= tol


def _segment_distance3(p: np.ndarray, q: np.ndarray, r: np.ndarray, s: np.ndarray) -> float:
    """Distance between segments pq and rs in R^3."""
    d1, d2, w = q - p, s - r, p - r
    a, e = float(d1 @ d1), float(d2 @ d2)
    b, c, f = float(d1 @ d2), float(d1 @ w), float(d2 @ w)
    denom = a * e - b * b
    sc = 0.0 if denom <= 1e-300 else min(1.0, max(0.0, (b * f - c * e) / denom))
    tc = (b * sc + f) / e if e > 0 else 0.0
    if tc < 0.0:
        tc = 0.0
        sc = min(1.0, max(0.0, -c / a)) if a > 0 else 0.0
    elif tc > 1.0:
        tc = 1.0
        sc = min(1.0, max(0.0, (b - c) / a)) if a > 0 else 0.0
    return float(np.linalg.norm(w + sc * d1 - tc * d2))


def mirror_knot(knot: PolyKnot) -> PolyKnot:
    """Reflect in the plane x3 = 0."""
    return PolyKnot(tuple((x, y, -z) for x, y, z in knot.vertices), long=knot.long)


def open_closed_knot(knot: PolyKnot) -> PolyKnot:
    """Turn a closed knot into an isotopic long knot.

    The polygon is cut at its vertex V0 of maximal x1. V0 is joined straight
    up to an axis running above the knot, and a copy V0' shifted slightly in
    +x1 closes the last edge and climbs back to the axis. The result is
    translated so the axis is the x1-axis.
    """
    if knot.long:
        return knot
    pts = knot.points
    n = len(pts)
    pts = np.roll(pts, -int(np.argmax(pts[:, 0])), axis=0)
    v0 = pts[0]
    diameter = max(knot.diameter, 1e-12)

    clearance = diameter
    closing = (pts[n - 1], v0)
    for j in range(1, n - 2):
        clearance = min(clearance, _segment_distance3(closing[0], closing[1], pts[j], pts[j + 1]))
    eps = min(0.5 * clearance, 0.1 * diameter)
    # The two climbing segments must not be parallel, or both would share a
    # plane with the axis.
    eta = 0.5 * eps
    top = float(pts[:, 2].max()) + 0.1 * diameter
    axis_y = float(v0[1]) + eta
    x_max = float(v0[0])

    path = [np.array([x_max, axis_y, top])]
    path.extend(pts)
    path.append(v0 + np.array([eps, eta, 0.0]))
    path.append(np.array([x_max + eps, axis_y, top]))
    shift = np.array([0.0, -axis_y, -top])
    verts = [tuple(float(c) for c in p + shift) for p in path]
    # Snap the axis endpoints exactly.
    verts[0] = (verts[0][0], 0.0, 0.0)
    verts[-1] = (verts[-1][0], 0.0, 0.0)
    logger.debug("Opened closed knot at vertex x1=%.6g (eps=%.3g)", x_max, eps)
    return PolyKnot(tuple(verts), long=True)


def _as_long(knot: PolyKnot) -> PolyKnot:
    return knot if knot.long else open_closed_knot(knot)


def knot_connect(k1: PolyKnot, k2: PolyKnot, gap: Optional[float] = None) -> PolyKnot:
    """Connected sum of two long knots, k2 placed to the right of k1.

    When both summands leave the axis, k2 is first turned about the x1-axis
    so no two climbing segments end up parallel.
    """
    if not (k1.long and k2.long):
        raise ValueError("knot_connect needs two long knots; open closed knots with open_closed_knot first")
    tol = 1e-9
    p1, p2 = k1.points, k2.points
    off1 = any(not _on_axis(v, tol) for v in k1.vertices)
    off2 = any(not _on_axis(v, tol) for v in k2.vertices)
    if off1 and off2:
        c, s = math.cos(_CONNECT_TWIST), math.sin(_CONNECT_TWIST)
        p2 = np.column_stack([p2[:, 0], c * p2[:, 1] - s * p2[:, 2], s * p2[:, 1] + c * p2[:, 2]])
    if gap is None:
        gap = 0.1 * max(k1.diameter, k2.diameter, 1e-9)
    shift = float(p1[:, 0].max()) + gap - float(p2[:, 0].min())
    p2 = p2 + np.array([shift, 0.0, 0.0])
    verts = [tuple(float(c) for c in v) for v in p1] + [tuple(float(c) for c in v) for v in p2]
    verts[len(p1)] = (verts[len(p1)][0], 0.0, 0.0)
    verts[-1] = (verts[-1][0], 0.0, 0.0)
    return PolyKnot(tuple(verts), long=True)


def perturb_knot(knot: PolyKnot, seed: int, magnitude: float) -> PolyKnot:
    """Displace every vertex off the axis by a hashed 3D offset of norm <= magnitude."""
    if magnitude < 0:
        raise ValueError(f"magnitude must be >= 0, got {magnitude}")
    if magnitude == 0:
        return knot
    half = magnitude / math.sqrt(2.0)
    moved = []
    for i, v in enumerate(knot.vertices):
        if knot.long and _on_axis(v, 1e-9):
            moved.append(v)
            continue
        ox, oy = hash_offset(seed, "knot-xy", i, half)
        oz, _ = hash_offset(seed, "knot-z", i, half)
        moved.append((v[0] + ox, v[1] + oy, v[2] + oz))
    return PolyKnot(tuple(moved), long=knot.long)


# ------------------------------
# Segments of a long knot
# ------------------------------
@dataclass(frozen=True)
class _Segments:
    """Segments of a long knot in normalized coordinates.

    Index 0 is the left ray and the last index the right ray.
    """

    starts: np.ndarray
    ends: np.ndarray
    axis: np.ndarray
    param_start: np.ndarray
    lengths: np.ndarray
    center: np.ndarray
    scale: float

    @property
    def count(self) -> int:
        return len(self.starts)

    def to_world(self, p: np.ndarray) -> np.ndarray:
        return p * self.scale + self.center


def _segments(knot: PolyKnot, settings: Settings) -> _Segments:
    pts = knot.points
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center = 0.5 * (lo + hi)
    scale = max(float(np.linalg.norm(hi - lo)), 1e-12)
    ray = settings.ray_length_factor * scale
    axis_tol = 1e-12 + 1e-9 * scale

    starts = [pts[0] - np.array([ray, 0.0, 0.0])] + list(pts[:-1]) + [pts[-1]]
    ends = [pts[0]] + list(pts[1:]) + [pts[-1] + np.array([ray, 0.0, 0.0])]
    starts_a, ends_a = np.asarray(starts), np.asarray(ends)
    lengths = np.linalg.norm(ends_a - starts_a, axis=1)
    axis = np.array(
        [_on_axis(a, axis_tol) and _on_axis(b, axis_tol) for a, b in zip(starts_a, ends_a)], dtype=bool
    )
    param_start = np.concatenate([[-ray], np.concatenate([[0.0], np.cumsum(lengths[1:-1])])])
    return _Segments(
        starts=(starts_a - center) / scale,
        ends=(ends_a - center) / scale,
        axis=axis,
        param_start=param_start,
        lengths=lengths,
        center=center,
        scale=scale,
    )


def knot_segments(knot: PolyKnot, settings: Optional[Settings] = None) -> List[Tuple[Vec3, Vec3]]:
    """World-coordinate segments a scan works on, rays included."""
    segs = _segments(_as_long(knot), settings or Settings())
    return [
        (tuple(segs.to_world(a).tolist()), tuple(segs.to_world(b).tolist()))  # type: ignore[misc]
        for a, b in zip(segs.starts, segs.ends)
    ]


def validate_knot(knot: PolyKnot, settings: Optional[Settings] = None) -> List[str]:
    """Simplicity problems of the knot, rays included, as messages."""
    settings = settings or Settings()
    segs = _segments(_as_long(knot), settings)
    limit = settings.tolerance.sep_tol / segs.scale
    problems = []
    for i, j in itertools.combinations(range(segs.count), 2):
        if j == i + 1 or (segs.axis[i] and segs.axis[j]):
            continue
        dist = _segment_distance3(segs.starts[i], segs.ends[i], segs.starts[j], segs.ends[j])
        if dist <= limit:
            problems.append(f"segments {i} and {j} pass within {dist * segs.scale:.3g}")
    return problems


# ------------------------------
# Line transversals
# ------------------------------
def _plucker_rows(starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    d = ends - starts
    rows = np.concatenate([np.cross(starts, d), d], axis=-1)
    return rows / np.linalg.norm(rows, axis=-1, keepdims=True)


def _reciprocal(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", x[..., :3], y[..., 3:]) + np.einsum("...i,...i->...", y[..., :3], x[..., 3:])


def _transversal_kernel(rows: np.ndarray) -> Dict[str, np.ndarray]:
    """Candidate transversal lines for stacked (Q, 4, 6) incidence rows.

    Returns the lines as a (Q, 2, 6) array with a (Q, 2) validity mask, a
    (Q, 2) near-double-root mask, and (Q,) masks for rank-deficient and
    identically-zero quadruples.
    """
    _, sv, vh = np.linalg.svd(rows)
    rank_deficient = sv[:, 3] <= _RANK_TOL * sv[:, 0]
    f, g = vh[:, 4, :], vh[:, 5, :]
    qc = 0.5 * _reciprocal(f, f)
    qa = 0.5 * _reciprocal(g, g)
    qb = _reciprocal(f, g)
    biggest = np.maximum(np.maximum(np.abs(qa), np.abs(qb)), np.abs(qc))
    zero = biggest < _QUAD_TOL
    linear = ~zero & (np.maximum(np.abs(qa), np.abs(qc)) <= _QUAD_TOL * np.abs(qb))

    disc = qb * qb - 4.0 * qa * qc
    spread = qb * qb + 4.0 * np.abs(qa * qc)
    real = disc >= -_DOUBLE_TOL * spread
    double = np.abs(disc) <= _DOUBLE_TOL * spread
    root = np.sqrt(np.clip(disc, 0.0, None))
    use_c = np.abs(qc) >= np.abs(qa)

    with np.errstate(divide="ignore", invalid="ignore"):
        den = np.where(use_c, 2.0 * qc, 2.0 * qa)
        den = np.where(den == 0.0, 1.0, den)
        r1 = (-qb + root) / den
        r2 = (-qb - root) / den
    # c mu^2 + b mu nu + a nu^2 = 0: solve for mu with nu = 1, or nu with mu = 1.
    mu = np.stack([np.where(use_c, r1, 1.0), np.where(use_c, r2, 1.0)], axis=1)
    nu = np.stack([np.where(use_c, 1.0, r1), np.where(use_c, 1.0, r2)], axis=1)
    mu = np.where(linear[:, None], np.array([1.0, 0.0]), mu)
    nu = np.where(linear[:, None], np.array([0.0, 1.0]), nu)

    lines = mu[..., None] * f[:, None, :] + nu[..., None] * g[:, None, :]
    valid = (real & ~zero & ~rank_deficient)[:, None] & np.isfinite(lines).all(axis=-1)
    double_mask = np.broadcast_to((double & ~linear)[:, None], valid.shape)
    return {
        "lines": lines,
        "valid": valid,
        "double": double_mask,
        "rank_deficient": rank_deficient,
        "zero": zero & ~rank_deficient,
    }


def _hits(starts: np.ndarray, ends: np.ndarray, lines: np.ndarray) -> Dict[str, np.ndarray]:
    """Closest points of (Q, 2) lines on their quadruple's (Q, 4) segments."""
    d = lines[..., :3]
    m = lines[..., 3:]
    dn2 = np.einsum("...i,...i->...", d, d)
    ok = dn2 > 1e-24
    safe = np.where(ok, dn2, 1.0)
    p0 = np.cross(d, m) / safe[..., None]
    e = d / np.sqrt(safe)[..., None]

    a_pt = starts[:, None, :, :]
    seg = (ends - starts)[:, None, :, :]
    p0b, eb = p0[:, :, None, :], e[:, :, None, :]
    w0 = a_pt - p0b
    aa = np.einsum("...i,...i->...", seg, seg)
    bb = np.einsum("...i,...i->...", seg, eb)
    dd = np.einsum("...i,...i->...", seg, w0)
    ee = np.einsum("...i,...i->...", eb, w0)
    denom = aa - bb * bb
    parallel = denom <= _PARALLEL_TOL * aa
    denom = np.where(parallel, 1.0, denom)
    u = (bb * ee - dd) / denom
    lam = (aa * ee - bb * dd) / denom
    on_seg = a_pt + u[..., None] * seg
    on_line = p0b + lam[..., None] * eb
    residual = np.linalg.norm(on_seg - on_line, axis=-1)
    return {
        "u": u,
        "points": on_seg,
        "residual": residual,
        "ok": ok & ~parallel.any(axis=-1),
        "point": p0,
        "direction": e,
    }


@dataclass(frozen=True)
class TransversalLine:
    point: Vec3
    direction: Vec3
    params: Tuple[float, float, float, float]
    residual: float
    double_root: bool = False


def line_transversals(
    seg1: Tuple[Sequence[float], Sequence[float]],
    seg2: Tuple[Sequence[float], Sequence[float]],
    seg3: Tuple[Sequence[float], Sequence[float]],
    seg4: Tuple[Sequence[float], Sequence[float]],
    settings: Optional[Settings] = None,
) -> List[TransversalLine]:
    """Common transversals of four segments (at most two).

    Only lines whose hit on every supporting line falls inside the segment,
    up to ``endpoint_tol`` in segment parameter, are returned. Four mutually
    parallel segments have no finite transversal unless coplanar.
    """
    settings = settings or Settings()
    tol = settings.tolerance
    segs = [seg1, seg2, seg3, seg4]
    starts = np.array([s[0] for s in segs], dtype=float)
    ends = np.array([s[1] for s in segs], dtype=float)
    dirs = ends - starts
    if np.any(np.linalg.norm(dirs, axis=1) == 0.0):
        raise ValueError("Segments must have distinct endpoints")

    lo, hi = np.minimum(starts, ends).min(axis=0), np.maximum(starts, ends).max(axis=0)
    center, scale = 0.5 * (lo + hi), max(float(np.linalg.norm(hi - lo)), 1e-12)
    ns, ne = (starts - center) / scale, (ends - center) / scale
    rows = _plucker_rows(ns, ne)
    kernel = _transversal_kernel(rows[None])
    if kernel["rank_deficient"][0]:
        units = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        parallel = all(np.linalg.norm(np.cross(units[0], units[k])) <= 1e-12 for k in range(1, 4))
        coplanar = np.linalg.matrix_rank(np.vstack([ns - ns[0], ne - ns[0]]), tol=1e-12) <= 2
        if parallel and not coplanar:
            return []
        raise DegenerateConfigurationError("the four supporting lines admit infinitely many transversals")
    if kernel["zero"][0]:
        raise DegenerateConfigurationError("transversal quadratic vanishes identically")

    hits = _hits(ns[None], ne[None], kernel["lines"])
    found: List[TransversalLine] = []
    for r in range(2):
        if not (kernel["valid"][0, r] and hits["ok"][0, r]):
            continue
        u = hits["u"][0, r]
        if np.any(u < -tol.endpoint_tol) or np.any(u > 1.0 + tol.endpoint_tol):
            continue
        residual = float(hits["residual"][0, r].max()) * scale
        if residual > tol.sep_tol * max(1.0, scale):
            continue
        point = hits["point"][0, r] * scale + center
        line = TransversalLine(
            point=tuple(point.tolist()),  # type: ignore[arg-type]
            direction=tuple(hits["direction"][0, r].tolist()),  # type: ignore[arg-type]
            params=tuple(float(x) for x in u),  # type: ignore[arg-type]
            residual=residual,
            double_root=bool(kernel["double"][0, r]),
        )
        if any(_same_line(line, other) for other in found):
            continue
        found.append(line)
    return found


def _same_line(a: TransversalLine, b: TransversalLine) -> bool:
    da, db = np.array(a.direction), np.array(b.direction)
    if np.linalg.norm(np.cross(da, db)) > 1e-9:
        return False
    offset = np.array(b.point) - np.array(a.point)
    return bool(np.linalg.norm(np.cross(offset, da)) <= 1e-9 * max(1.0, float(np.linalg.norm(offset))))


# ------------------------------
# Quadrisecants
# ------------------------------
@dataclass(frozen=True)
class QuadEvent:
    kind: str
    segments: Tuple[int, ...]
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "segments": list(self.segments), "detail": self.detail}


@dataclass(frozen=True)
class Quadrisecant:
    """A line meeting the knot at four points, listed in knot order.

    ``direction`` orients the line from the first hit towards the second;
    ``line_order`` lists knot indices 1..4 in the order met along it.
    ``segments`` index into ``knot_segments`` of the long knot the
    quadrisecant was found on (0 is the left ray).
    """

    point: Vec3
    direction: Vec3
    knot_params: Tuple[float, float, float, float]
    segments: Tuple[int, int, int, int]
    hits: Tuple[Vec3, Vec3, Vec3, Vec3]
    line_order: Tuple[int, int, int, int]
    pattern: str
    residual: float
    sign: Optional[int] = None

    @property
    def alternating(self) -> bool:
        return self.pattern == PATTERN_ALTERNATING

    def with_sign(self, sign: Optional[int]) -> "Quadrisecant":
        return replace(self, sign=sign)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": list(self.point),
            "direction": list(self.direction),
            "knot_params": list(self.knot_params),
            "segments": list(self.segments),
            "hits": [list(h) for h in self.hits],
            "line_order": list(self.line_order),
            "pattern": self.pattern,
            "residual": self.residual,
            "sign": self.sign,
        }


def _line_positions(hits: np.ndarray) -> np.ndarray:
    """Positions of the hits along p1 -> p2, with p1 at 0 and p2 at 1."""
    d = hits[1] - hits[0]
    return (hits - hits[0]) @ d / float(d @ d)


def _orthonormal_frame(direction: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    e = direction / np.linalg.norm(direction)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(e)))] = 1.0
    e1 = np.cross(e, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(e, e1)


def _alignment_jacobian(hits: np.ndarray, tangents: np.ndarray) -> np.ndarray:
    """Jacobian of the alignment of p3 and p4 with the line p1 p2.

    Rows are the normal-plane components of p3 and p4 relative to the line
    through p1 and p2; columns are the four arclength parameters.
    """
    alpha = _line_positions(hits)
    e1, e2 = _orthonormal_frame(hits[1] - hits[0])
    q = np.stack([tangents @ e1, tangents @ e2], axis=1)
    jac = np.zeros((4, 4))
    for block, (k, a) in enumerate(((2, alpha[2]), (3, alpha[3]))):
        rows = slice(2 * block, 2 * block + 2)
        jac[rows, 0] = (a - 1.0) * q[0]
        jac[rows, 1] = -a * q[1]
        jac[rows, k] = q[k]
    return jac


def _tangents(segs: _Segments, indices: Sequence[int]) -> np.ndarray:
    d = segs.ends[list(indices)] - segs.starts[list(indices)]
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _raw_sign(segs: _Segments, q: Quadrisecant, eq_tol: float) -> int:
    hits = (np.asarray(q.hits) - segs.center) / segs.scale
    det = float(np.linalg.det(_alignment_jacobian(hits, _tangents(segs, q.segments))))
    if abs(det) < eq_tol:
        raise DegenerateConfigurationError(f"alignment Jacobian is singular (det={det:.3g}) at segments {q.segments}")
    return 1 if det > 0 else -1


def _scan(
    knot: PolyKnot, settings: Settings, alternating_only: bool
) -> Tuple[List[Quadrisecant], List[QuadEvent], _Segments]:
    """One pass over every edge 4-subset of a long knot."""
    tol = settings.tolerance
    segs = _segments(knot, settings)
    n = segs.count
    rows = _plucker_rows(segs.starts, segs.ends)
    quads = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), 4)), dtype=np.int64
    ).reshape(-1, 4)
    quads = quads[segs.axis[quads].sum(axis=1) < 2]
    axis_tol = tol.sep_tol * max(1.0, segs.scale)
    resid_limit = tol.sep_tol
    sep = tol.sep_tol / segs.scale
    found: List[Quadrisecant] = []
    events: List[QuadEvent] = []

    for lo in range(0, len(quads), _CHUNK):
        chunk = quads[lo : lo + _CHUNK]
        kernel = _transversal_kernel(rows[chunk])
        for idx in np.flatnonzero(kernel["rank_deficient"]):
            quad = chunk[idx]
            units = _tangents(segs, quad)
            if all(np.linalg.norm(np.cross(units[0], units[k])) <= 1e-12 for k in range(1, 4)):
                continue
            events.append(QuadEvent(EVENT_RANK_DEFICIENT, tuple(int(i) for i in quad)))
        for idx in np.flatnonzero(kernel["zero"]):
            events.append(QuadEvent(EVENT_IDENTICALLY_ZERO, tuple(int(i) for i in chunk[idx])))

        hits = _hits(segs.starts[chunk], segs.ends[chunk], kernel["lines"])
        u = hits["u"]
        inside = ((u >= -tol.endpoint_tol) & (u <= 1.0 + tol.endpoint_tol)).all(axis=-1)
        keep = kernel["valid"] & hits["ok"] & inside
        for qi, r in zip(*np.nonzero(keep)):
            quad = tuple(int(i) for i in chunk[qi])
            hit_pts = hits["points"][qi, r]
            if min(np.linalg.norm(hit_pts[i] - hit_pts[j]) for i, j in itertools.combinations(range(4), 2)) <= sep:
                continue
            world = segs.to_world(hit_pts)
            if sum(_on_axis(p, axis_tol) for p in world) >= 2:
                continue
            uq = u[qi, r]
            if np.any(uq < tol.endpoint_tol) or np.any(uq > 1.0 - tol.endpoint_tol):
                events.append(QuadEvent(EVENT_ENDPOINT_HIT, quad, f"u={np.round(uq, 9).tolist()}"))
                continue
            residual = float(hits["residual"][qi, r].max()) * segs.scale
            if residual > resid_limit:
                continue
            if residual > tol.eq_tol * max(1.0, segs.scale):
                events.append(QuadEvent(EVENT_RESIDUAL, quad, f"residual={residual:.3g}"))
                continue
            if kernel["double"][qi, r]:
                events.append(QuadEvent(EVENT_DOUBLE_ROOT, quad))
                continue

            alpha = _line_positions(hit_pts)
            order = tuple(int(i) + 1 for i in np.argsort(alpha, kind="stable"))
            pattern = PATTERN_ALTERNATING if alpha[2] < 0.0 < alpha[3] < 1.0 else PATTERN_OTHER
            if alternating_only and pattern != PATTERN_ALTERNATING:
                continue
            direction = world[1] - world[0]
            direction = direction / np.linalg.norm(direction)
            params = tuple(
                float(segs.param_start[k] + uk * segs.lengths[k]) for k, uk in zip(quad, uq)
            )
            found.append(
                Quadrisecant(
                    point=tuple(world[0].tolist()),  # type: ignore[arg-type]
                    direction=tuple(direction.tolist()),  # type: ignore[arg-type]
                    knot_params=params,  # type: ignore[arg-type]
                    segments=quad,  # type: ignore[arg-type]
                    hits=tuple(tuple(p.tolist()) for p in world),  # type: ignore[arg-type]
                    line_order=order,  # type: ignore[arg-type]
                    pattern=pattern,
                    residual=residual,
                )
            )
    found.sort(key=lambda q: q.knot_params)
    logger.debug("Scanned %d quadruples on %d segments: %d lines, %d events", len(quads), n, len(found), len(events))
    return found, events, segs


@dataclass(frozen=True)
class QuadRetry:
    seed: int
    magnitude: float
    events: Tuple[QuadEvent, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"seed": self.seed, "magnitude": self.magnitude, "events": [e.to_dict() for e in self.events]}


@dataclass
class QuadrisecantCount:
    """Alternating quadrisecants of a knot with their totals.

    ``knot`` is the long knot the quadrisecants were found on; it differs from
    the input when the input was closed or had to be perturbed.
    """

    knot: PolyKnot
    quadrisecants: List[Quadrisecant]
    signed_total: Optional[int]
    degeneracies: List[QuadEvent] = field(default_factory=list)
    retries: List[QuadRetry] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.quadrisecants)

    @property
    def parity(self) -> int:
        return self.count % 2

    def to_dict(self, include_quadrisecants: bool = True) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "signed_total": self.signed_total,
            "count": self.count,
            "parity": self.parity,
            "degeneracies": [e.to_dict() for e in self.degeneracies],
            "retries": [r.to_dict() for r in self.retries],
        }
        if include_quadrisecants:
            data["quadrisecants"] = [q.to_dict() for q in self.quadrisecants]
        return data


def reference_trefoil(n: int = 24) -> PolyKnot:
    """Jittered (2,3) torus knot used to fix the global sign; the shipped 3_1.knot traces the same curve."""
    t = 2.0 * np.pi * np.arange(n) / n
    i = np.arange(n)
    pts = np.column_stack(
        [np.sin(t) + 2.0 * np.sin(2.0 * t), np.cos(t) - 2.0 * np.cos(2.0 * t), -np.sin(3.0 * t)]
    )
    jitter = np.column_stack([0.004 * np.sin(12.9898 * i + 78.233 * k + 0.5 * i * i) for k in (1, 2, 3)])
    return PolyKnot(tuple(tuple(p) for p in (pts + jitter).tolist()))


@functools.lru_cache(maxsize=1)
def calibration_sign() -> int:
    """Global sign making the reference trefoil total +1."""
    result = _count(reference_trefoil(), Settings(), signed=True, calibration=1)
    if result.signed_total not in (1, -1):
        raise RuntimeError(f"Reference trefoil gave raw signed total {result.signed_total}, expected +-1")
    return int(result.signed_total)


def sign_of_quadrisecant(knot: PolyKnot, q: Quadrisecant, settings: Optional[Settings] = None) -> int:
    """Local intersection sign (+1 or -1) of an alternating quadrisecant.

    ``knot`` must be the knot ``q`` was found on (opened if it was closed).
    Raises DegenerateConfigurationError when the Jacobian is singular.
    """
    settings = settings or Settings()
    segs = _segments(_as_long(knot), settings)
    return _raw_sign(segs, q, settings.tolerance.eq_tol) * calibration_sign()


def _count(knot: PolyKnot, settings: Settings, signed: bool, calibration: Optional[int]) -> QuadrisecantCount:
    base = _as_long(knot)
    scale = max(base.diameter, 1e-12)
    retries: List[QuadRetry] = []
    attempts = [(0, 0.0)] + [
        (i, 10.0 * settings.tolerance.endpoint_tol * 2 ** (i - 1) * scale) for i in range(1, settings.max_retries + 1)
    ]
    all_events: List[QuadEvent] = []
    for seed, magnitude in attempts:
        work = perturb_knot(base, seed, magnitude) if seed else base
        quads, events, segs = _scan(work, settings, alternating_only=True)
        total: Optional[int] = None
        if signed and not events:
            total = 0
            signed_quads = []
            for q in quads:
                try:
                    s = _raw_sign(segs, q, settings.tolerance.eq_tol)
                except DegenerateConfigurationError as e:
                    events.append(QuadEvent(EVENT_SINGULAR_JACOBIAN, q.segments, str(e)))
                    continue
                s *= calibration if calibration is not None else calibration_sign()
                signed_quads.append(q.with_sign(s))
                total += s
            quads = signed_quads
        if not events:
            if retries:
                logger.info("Resolved after %d perturbation retries", len(retries))
            return QuadrisecantCount(work, quads, total, all_events, retries)
        all_events.extend(events)
        if seed:
            retries.append(QuadRetry(seed, magnitude, tuple(events)))
        logger.warning(
            "%d degenerate quadruples (%s); retrying with seed %d",
            len(events),
            ", ".join(sorted({e.kind for e in events})),
            seed + 1,
        )
    raise UnresolvedDegeneracyError(
        f"Quadrisecant degeneracies persisted through {settings.max_retries} perturbation retries",
        events=all_events,
        retries=retries,
    )


def count_alternating_quadrisecants(
    knot: PolyKnot, settings: Optional[Settings] = None, signed: bool = True
) -> QuadrisecantCount:
    """Alternating quadrisecants with signed total, count and parity.

    Degenerate quadruples trigger perturbation of the off-axis vertices, with
    seeds 1..max_retries and doubling magnitudes; UnresolvedDegeneracyError
    carries the event log if none of them helps.
    """
    return _count(knot, settings or Settings(), signed=signed, calibration=None)


def alternating_quadrisecants(knot: PolyKnot, settings: Optional[Settings] = None) -> List[Quadrisecant]:
    return count_alternating_quadrisecants(knot, settings).quadrisecants


def all_quadrisecants(knot: PolyKnot, settings: Optional[Settings] = None) -> List[Quadrisecant]:
    """Every quadrisecant of the (opened) knot found in a single scan, unsigned."""
    quads, events, _ = _scan(_as_long(knot), settings or Settings(), alternating_only=False)
    if events:
        logger.warning("%d degenerate quadruples skipped", len(events))
    return quads


def signed_total(quadrisecants: Iterable[Quadrisecant]) -> int:
    total = 0
    for q in quadrisecants:
        if q.sign is None:
            raise ValueError("quadrisecant has no sign; count with signed=True")
        total += q.sign
    return total


__all__ = [
    "PATTERN_ALTERNATING",
    "PATTERN_OTHER",
    "PolyKnot",
    "QuadEvent",
    "QuadRetry",
    "Quadrisecant",
    "QuadrisecantCount",
    "TransversalLine",
    "all_quadrisecants",
    "alternating_quadrisecants",
    "calibration_sign",
    "count_alternating_quadrisecants",
    "knot_connect",
    "knot_segments",
    "line_transversals",
    "mirror_knot",
    "open_closed_knot",
    "parse_knot",
    "perturb_knot",
    "reference_trefoil",
    "serialize_knot",
    "sign_of_quadrisecant",
    "signed_total",
    "validate_knot",
]
