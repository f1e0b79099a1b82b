import math

import numpy as np
import pytest

from knotmu.errors import ParameterDomainError
from knotmu.grid_oracle import GridConfig, brute_pair_solutions
from knotmu.geom_core import (
    PLCurve,
    PLFunction,
    Point2,
    curve_track,
    eval_curve,
    hash_offset,
    segment_distance,
    self_intersections,
    solve_separable_pair,
    solve_univariate,
    vertical_hits,
    vertical_segments,
)

SQUARE = PLCurve(((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)))


def line(a, b):
    """PL function a + (b - a) * x on [0, 1]."""
    return PLFunction.from_breakpoints([(0.0, a), (1.0, b)])


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        Point2(math.nan, 0.0)
    assert Point2(3.0, 4.0).norm() == pytest.approx(5.0)


def test_curve_needs_enough_vertices():
    with pytest.raises(ValueError):
        PLCurve(((0.0, 0.0), (1.0, 0.0)))
    arc = PLCurve(((0.0, 0.0), (1.0, 0.0)), closed=False)
    assert arc.n_segments == 1


def test_eval_curve_uniform_per_vertex():
    p = eval_curve(SQUARE, 0.125)
    assert (p.x1, p.x2) == pytest.approx((0.0, -0.5))
    assert eval_curve(SQUARE, 0.5).as_list() == pytest.approx([0.5, 0.5])


def test_eval_curve_domain():
    with pytest.raises(ParameterDomainError):
        eval_curve(SQUARE, 1.0)
    with pytest.raises(ParameterDomainError):
        eval_curve(SQUARE, -0.1)
    arc = PLCurve(((0.0, 0.0), (1.0, 0.0)), closed=False)
    assert eval_curve(arc, 1.0).x1 == pytest.approx(1.0)


def test_curve_track_and_reverse():
    track = curve_track(SQUARE, 0.0, 1.0, axis=0)
    assert list(track.ts) == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    assert list(track.values) == pytest.approx([-0.5, 0.5, 0.5, -0.5, -0.5])
    back = curve_track(SQUARE, 0.0, 1.0, axis=0, reverse=True)
    assert back(0.1) == pytest.approx(track(0.9))


def test_vertical_segments_of_square():
    assert vertical_segments(SQUARE) == [1, 3]


def test_self_intersections():
    bowtie = PLCurve(((-0.5, -0.5), (0.5, 0.5), (0.5, -0.5), (-0.5, 0.5)))
    assert self_intersections(bowtie, 1e-6) == [(0, 2)]
    assert self_intersections(SQUARE, 1e-6) == []


def test_segment_distance():
    assert segment_distance((0, 0), (1, 0), (0, 1), (1, 1)) == pytest.approx(1.0)
    assert segment_distance((0, 0), (1, 1), (0, 1), (1, 0)) == 0.0


def test_pair_solver_regular_root():
    sols = solve_separable_pair(u=line(0, 1), v=line(0, 1), w=line(0, 1), z=line(1, 0))
    assert len(sols) == 1
    sol = sols[0]
    assert (sol.s, sol.t) == pytest.approx((0.5, 0.5))
    assert not sol.singular
    assert max(sol.residuals) < 1e-12


def test_pair_solver_no_root():
    assert solve_separable_pair(u=line(0, 1), v=line(2, 3), w=line(0, 1), z=line(1, 0)) == []


def test_pair_solver_flags_continuum():
    sols = solve_separable_pair(u=line(0, 1), v=line(0, 1), w=line(0, 1), z=line(0, 1))
    assert len(sols) == 1
    assert sols[0].singular, "a solution continuum must be flagged singular"


def test_pair_solver_multiple_cells():
    zigzag = PLFunction.from_breakpoints([(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)])
    # u(t) = v(s) with v = s and w(s) = z(t) with w = 1 - s: s = zigzag(t), s = 1 - t.
    sols = solve_separable_pair(u=zigzag, v=line(0, 1), w=line(1, 0), z=line(0, 1))
    ts = sorted(round(sol.t, 9) for sol in sols)
    assert ts == pytest.approx([1 / 3, 1.0]), f"unexpected roots {sols}"


@pytest.mark.slow
def test_pair_solver_agrees_with_grid_boxes():
    # Breakpoints on the 1/8 lattice keep every grid cell inside one linear piece.
    rng = np.random.default_rng(2024)
    cfg = GridConfig(resolution=1024, refinement_depth=2)
    step = 1.0 / cfg.resolution
    knots = np.linspace(0.0, 1.0, 9)
    compared = 0
    for _ in range(100):
        values = [rng.uniform(0.0, 1.0, knots.size) for _ in range(4)]
        u, v, w, z = (PLFunction.from_breakpoints(list(zip(knots.tolist(), y.tolist()))) for y in values)
        slope_u, slope_v, slope_w, slope_z = (np.diff(y) / np.diff(knots) for y in values)
        det = slope_v[:, None] * slope_z[None, :] - slope_u[None, :] * slope_w[:, None]
        if np.abs(det).min() <= 10 * 1e-9:
            continue
        exact = solve_separable_pair(u, v, w, z)
        if any(sol.singular for sol in exact):
            continue
        pts = np.array([(sol.s, sol.t) for sol in exact]).reshape(-1, 2)
        if pts.size and (pts.min() < 2 * step or pts.max() > 1.0 - 2 * step):
            continue
        gaps = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2) + np.eye(len(pts))
        if len(pts) > 1 and gaps.min() < 4 * step:
            continue
        boxes = brute_pair_solutions(u, v, w, z, cfg)
        assert len(boxes) == len(exact), f"grid {len(boxes)} vs exact {len(exact)}"
        for sol in exact:
            assert any(b.contains(sol.s, sol.t, slack=step) for b in boxes), f"no box near ({sol.s}, {sol.t})"
        compared += 1
    assert compared >= 50, f"only {compared} quadruples passed the filters"


def test_univariate_roots():
    assert solve_univariate(line(0, 1), line(1, 0)) == [(pytest.approx(0.5), False)]
    roots = solve_univariate(line(0, 1), line(0, 1))
    assert len(roots) == 1 and roots[0][1], "coincident functions give one flat root"


def test_vertical_hits_open_interval():
    hits = vertical_hits([(SQUARE, "sq")], 0.0, -1.0, 1.0)
    assert [round(h.t, 9) for h in hits] == [0.125, 0.625]
    assert [h.point.x2 for h in hits] == pytest.approx([-0.5, 0.5])
    assert all(h.label == "sq" for h in hits)
    upper = vertical_hits([(SQUARE, "sq")], 0.0, 0.0, 1.0)
    assert len(upper) == 1
    # The endpoints of the interval are excluded.
    assert vertical_hits([(SQUARE, "sq")], 0.0, -0.5, 0.5) == []


def test_vertical_hits_rejects_empty_interval():
    with pytest.raises(ValueError):
        vertical_hits([(SQUARE, "sq")], 0.0, 0.5, 0.5)


def test_hash_offset_is_deterministic_and_bounded():
    a = hash_offset(7, "c1", 3, 1e-3)
    assert a == hash_offset(7, "c1", 3, 1e-3)
    assert a != hash_offset(8, "c1", 3, 1e-3)
    assert math.hypot(*a) <= 1e-3
    assert hash_offset(7, "c1", 3, 0.0) == (0.0, 0.0)
