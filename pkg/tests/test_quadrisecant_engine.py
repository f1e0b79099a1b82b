import math

import numpy as np
import pytest

from knotmu import corpus
from knotmu.errors import DegenerateConfigurationError, ParseError
from knotmu.quadrisecant_engine import (
    PolyKnot,
    count_alternating_quadrisecants,
    knot_connect,
    line_transversals,
    mirror_knot,
    open_closed_knot,
    parse_knot,
    perturb_knot,
    reference_trefoil,
    serialize_knot,
    sign_of_quadrisecant,
    signed_total,
    validate_knot,
)


def horizontal_through_axis(height, angle):
    c, s = math.cos(angle), math.sin(angle)
    return (-c, -s, height), (c, s, height)


def test_parse_knot_with_header_and_comments():
    knot = parse_knot("# square\nclosed\n0 0 0\n1 0 0\n\n1 1 0.5\n0 1 0\n")
    assert not knot.long
    assert len(knot.vertices) == 4
    assert knot.vertices[2] == (1.0, 1.0, 0.5)


def test_parse_knot_header_suggestion():
    with pytest.raises(ParseError) as info:
        parse_knot("clsoed\n0 0 0\n1 0 0\n0 1 0\n")
    assert info.value.suggestion == "closed"
    assert info.value.line == 1


def test_parse_knot_reports_line_of_bad_vertex():
    with pytest.raises(ParseError) as info:
        parse_knot("closed\n0 0 0\n1 0\n0 1 0\n")
    assert info.value.line == 3


def test_polyknot_checks():
    with pytest.raises(ValueError):
        PolyKnot(((0, 0, 0), (0, 0, 0), (1, 0, 0)))
    with pytest.raises(ValueError):
        PolyKnot(((0, 1, 0), (1, 0, 0)), long=True)
    assert PolyKnot(((0, 0, 0), (1, 0, 0)), long=True).long


def test_serialize_keeps_vertices():
    knot = corpus.load_knot("3_1")
    again = parse_knot(serialize_knot(knot, comment="trefoil"))
    assert np.allclose(again.points, knot.points, atol=1e-8)


def test_mirror_flips_height():
    knot = corpus.load_knot("3_1")
    assert np.allclose(mirror_knot(knot).points[:, 2], -knot.points[:, 2])


def test_open_closed_knot_ends_on_axis():
    knot = corpus.load_knot("4_1")
    long = open_closed_knot(knot)
    assert long.long
    assert len(long.vertices) == len(knot.vertices) + 3
    for end in (long.vertices[0], long.vertices[-1]):
        assert end[1] == 0.0 and end[2] == 0.0
    assert validate_knot(long) == []
    assert open_closed_knot(long) is long


def test_knot_connect_needs_long_knots():
    with pytest.raises(ValueError):
        knot_connect(corpus.load_knot("3_1"), corpus.load_knot("3_1"))


def test_perturb_knot_keeps_axis_endpoints():
    long = open_closed_knot(corpus.load_knot("3_1"))
    moved = perturb_knot(long, 5, 1e-4)
    assert moved.vertices[0] == long.vertices[0]
    assert moved.vertices[-1] == long.vertices[-1]
    assert moved.vertices[1] != long.vertices[1]
    assert np.max(np.linalg.norm(moved.points - long.points, axis=1)) <= 1e-4 + 1e-15
    assert perturb_knot(long, 5, 0.0) is long


def test_single_transversal_through_four_horizontal_segments():
    segs = [horizontal_through_axis(h, h - 1.0) for h in (1.0, 2.0, 3.0, 4.0)]
    lines = line_transversals(*segs)
    assert len(lines) == 1, lines
    line = lines[0]
    assert np.allclose(np.abs(line.direction), (0.0, 0.0, 1.0), atol=1e-9)
    assert np.allclose(line.point[:2], (0.0, 0.0), atol=1e-9)
    assert line.params == pytest.approx((0.5, 0.5, 0.5, 0.5))


def test_parallel_segments_have_no_transversal():
    segs = [((x, y, 0.0), (x, y, 1.0)) for x, y in ((0, 0), (1, 0), (0, 1), (1, 1.5))]
    assert line_transversals(*segs) == []


def test_coplanar_segments_are_degenerate():
    segs = [
        ((0, 0, 0), (1, 0, 0)),
        ((0, 1, 0), (1, 2, 0)),
        ((0, -1, 0), (2, 1, 0)),
        ((0.5, 0, 0), (0.5, 1, 0)),
    ]
    with pytest.raises(DegenerateConfigurationError):
        line_transversals(*segs)


def test_transversal_rejects_zero_length_segment():
    segs = [horizontal_through_axis(h, h) for h in (1.0, 2.0, 3.0)] + [((0, 0, 0), (0, 0, 0))]
    with pytest.raises(ValueError):
        line_transversals(*segs)


def test_unknot_total_is_zero(settings):
    result = count_alternating_quadrisecants(corpus.load_knot("unknot"), settings)
    assert result.signed_total == 0
    assert result.parity == result.count % 2 == 0


def test_unsigned_count_has_no_total(settings):
    result = count_alternating_quadrisecants(corpus.load_knot("3_1"), settings, signed=False)
    assert result.signed_total is None
    assert all(q.sign is None for q in result.quadrisecants)
    assert "quadrisecants" in result.to_dict()


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(corpus.KNOTS))
def test_signed_total_is_c2(name, settings):
    expected = corpus.KNOTS[name].c2
    result = count_alternating_quadrisecants(corpus.load_knot(name), settings)
    assert result.signed_total == expected, f"{name}: total {result.signed_total}, expected {expected}"
    assert signed_total(result.quadrisecants) == expected
    assert result.parity == expected % 2
    assert all(q.alternating for q in result.quadrisecants)


@pytest.mark.slow
def test_total_is_mirror_invariant(settings):
    result = count_alternating_quadrisecants(mirror_knot(corpus.load_knot("3_1")), settings)
    assert result.signed_total == 1


@pytest.mark.slow
def test_total_adds_under_connected_sum(settings):
    trefoil = open_closed_knot(corpus.load_knot("3_1"))
    eight = open_closed_knot(corpus.load_knot("4_1"))
    result = count_alternating_quadrisecants(knot_connect(trefoil, eight), settings)
    assert result.signed_total == 0


@pytest.mark.slow
def test_sign_of_quadrisecant_matches_count(settings):
    trefoil = corpus.load_knot("3_1")
    result = count_alternating_quadrisecants(trefoil, settings)
    assert result.quadrisecants
    for q in result.quadrisecants:
        assert sign_of_quadrisecant(result.knot, q, settings) == q.sign


def test_reference_trefoil_traces_shipped_trefoil():
    reference = np.asarray(reference_trefoil().vertices)
    shipped = np.asarray(corpus.load_knot("3_1").vertices)
    assert reference.shape == shipped.shape
    assert np.allclose(reference, shipped, atol=0.01), "calibration curve and 3_1.knot must share chirality"
    assert not np.allclose(reference, np.asarray(mirror_knot(corpus.load_knot("3_1")).vertices), atol=0.01)


@pytest.mark.slow
def test_reference_and_shipped_trefoil_totals_agree(settings):
    shipped = count_alternating_quadrisecants(corpus.load_knot("3_1"), settings)
    reference = count_alternating_quadrisecants(reference_trefoil(), settings)
    assert shipped.signed_total == reference.signed_total == 1


@pytest.mark.slow
def test_total_doubles_for_trefoil_sum(settings):
    trefoil = open_closed_knot(corpus.load_knot("3_1"))
    result = count_alternating_quadrisecants(knot_connect(trefoil, trefoil), settings)
    assert result.signed_total == 2


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_total_survives_small_vertex_perturbation(seed, settings):
    trefoil = corpus.load_knot("3_1")
    moved = perturb_knot(trefoil, seed, 1e-4)
    assert count_alternating_quadrisecants(moved, settings).signed_total == 1
