import json
from dataclasses import replace

import numpy as np
import pytest

from knotmu import corpus
from knotmu.decker_model import (
    DeckerDiagram,
    Edge,
    EdgePoint,
    Label,
    Orientation,
    Pairing,
    circle_curve,
    diagram_json_schema,
    parse_diagram,
    reflect_diagram,
    resample_diagram,
    rotate_curve_start,
    serialize_diagram,
    strip_union,
    tau,
    transform_diagram,
    validate,
)
from knotmu.errors import ParseError
from knotmu.geom_core import PLCurve, eval_curve_wrapped, perturb_diagram


def two_circles(orientation=Orientation.PRESERVING, centers=((-0.3, 0.0), (0.3, 0.0)), labels=("over", "under")):
    curves = {"A": circle_curve(centers[0], 0.2, n=32), "B": circle_curve(centers[1], 0.2, n=32)}
    edges = (
        Edge("a", "A", 0.0, 1.0, Label(labels[0])),
        Edge("b", "B", 0.0, 1.0, Label(labels[1])),
    )
    return DeckerDiagram("pair", curves, edges, (Pairing("a", "b", orientation),))


MINIMAL = {
    "name": "tiny",
    "curves": [{"id": "c1", "vertices": [[0.1, 0.1], [0.2, 0.1], [0.15, 0.2]]}],
    "edges": [{"id": "e1", "curve": "c1", "t0": 0.0, "t1": 1.0, "label": "over"}],
    "pairings": [],
}


@pytest.mark.parametrize("name", sorted(corpus.DIAGRAMS))
def test_shipped_diagrams_are_valid(name):
    report = validate(corpus.load_diagram(name))
    assert report.valid, f"{name}: {[v.message for v in report.violations]}"


def test_serialize_then_parse_preserves_structure():
    original = corpus.load_diagram("10_2")
    again = parse_diagram(serialize_diagram(original))
    assert again.name == original.name
    assert again.note == original.note and again.note, "the provenance note must survive"
    assert again.edges == original.edges
    assert again.pairings == original.pairings
    assert again.triple_vertices == original.triple_vertices
    assert set(again.curves) == set(original.curves)


def test_parse_rejects_bad_json_with_line():
    with pytest.raises(ParseError) as info:
        parse_diagram('{\n  "name": "x",\n  "curves": [,]\n}')
    assert info.value.line == 3


def test_parse_suggests_field_name():
    doc = json.loads(json.dumps(MINIMAL))
    doc["edges"][0]["lable"] = doc["edges"][0].pop("label")
    with pytest.raises(ParseError) as info:
        parse_diagram(json.dumps(doc, indent=2))
    assert info.value.suggestion == "label"


def test_parse_suggests_curve_id():
    doc = json.loads(json.dumps(MINIMAL))
    doc["edges"][0]["curve"] = "c"
    with pytest.raises(ParseError) as info:
        parse_diagram(json.dumps(doc, indent=2))
    assert info.value.field == "edges.0.curve"
    assert info.value.suggestion == "c1"


def test_parse_rejects_duplicate_ids():
    doc = json.loads(json.dumps(MINIMAL))
    doc["edges"].append(dict(doc["edges"][0]))
    with pytest.raises(ParseError, match="duplicate edge id"):
        parse_diagram(json.dumps(doc))


def test_valid_two_circle_diagram():
    assert validate(two_circles()).valid


def test_unpaired_edges_reported():
    d = two_circles()
    broken = DeckerDiagram(d.name, d.curves, d.edges, ())
    report = validate(broken)
    assert not report.valid
    assert report.kinds() == ["unpaired-edge"]
    assert len(report.violations) == 2


def test_label_complementarity_reported():
    report = validate(two_circles(labels=("over", "over")))
    assert "label-complementarity" in report.kinds()


def test_double_pairing_reported():
    d = two_circles()
    broken = DeckerDiagram(d.name, d.curves, d.edges, d.pairings + (Pairing("a", "b"),))
    assert "pairing-involution" in validate(broken).kinds()


def test_unit_disk_reported():
    report = validate(two_circles(centers=((-0.3, 0.0), (0.9, 0.0))))
    assert report.kinds() == ["unit-disk"]


def test_partial_edges_need_triple_vertices():
    curve = circle_curve((0.0, 0.0), 0.3, n=32)
    edges = (Edge("x", "C", 0.0, 0.5, Label.OVER), Edge("y", "C", 0.5, 1.0, Label.UNDER))
    d = DeckerDiagram("split", {"C": curve}, edges, (Pairing("x", "y"),))
    assert "edge-endpoint" in validate(d).kinds()


def test_self_paired_curve_branch_points_are_accepted():
    # Mirror-symmetric circle: right half over, left half under, paired reversing.
    curve = circle_curve((0.0, 0.0), 0.3, n=32, phase=0.0)
    edges = (Edge("right", "C", 0.75, 0.25, Label.OVER), Edge("left", "C", 0.25, 0.75, Label.UNDER))
    d = DeckerDiagram("mirror", {"C": curve}, edges, (Pairing("right", "left", Orientation.REVERSING),))
    report = validate(d)
    assert report.valid, [v.message for v in report.violations]


def test_tau_is_an_involution():
    for orientation, expected in ((Orientation.PRESERVING, 0.25), (Orientation.REVERSING, 0.75)):
        d = two_circles(orientation)
        image = tau(d, EdgePoint("a", 0.25))
        assert image.edge == "b"
        assert image.t == pytest.approx(expected)
        back = tau(d, image)
        assert back.edge == "a" and back.t == pytest.approx(0.25)


def test_tau_on_shipped_diagram():
    d = corpus.load_diagram("8_1")
    for edge in d.edges:
        p = EdgePoint(edge.id, d.edge_param(edge, 0.3))
        back = tau(d, tau(d, p))
        assert back.edge == edge.id and back.t == pytest.approx(p.t)


def test_strip_union_keeps_halves_apart():
    left, right = corpus.load_diagram("8_1"), corpus.load_diagram("10_2")
    union = strip_union(left, right)
    assert union.name == "8_1#10_2"
    assert len(union.edges) == len(left.edges) + len(right.edges)
    assert all(cid.startswith(("L.", "R.")) for cid in union.curves)
    max_left = max(c.points[:, 0].max() for cid, c in union.curves.items() if cid.startswith("L."))
    min_right = min(c.points[:, 0].min() for cid, c in union.curves.items() if cid.startswith("R."))
    assert min_right - max_left >= 0.02 - 1e-12
    assert validate(union).valid


def test_structural_operations_keep_validity():
    d = corpus.load_diagram("10_2")
    for changed in (
        transform_diagram(d, 0.8, (0.05, -0.02)),
        reflect_diagram(d),
        resample_diagram(d, 3),
        rotate_curve_start(d, "blue", 5),
    ):
        report = validate(changed)
        assert report.valid, [v.message for v in report.violations]


def test_resample_keeps_original_vertices():
    d = corpus.load_diagram("8_1")
    dense = resample_diagram(d, 2)
    for cid, curve in d.curves.items():
        assert dense.curves[cid].n_segments == 2 * curve.n_segments
        assert np.allclose(dense.curves[cid].points[::2], curve.points)


def test_transform_rejects_non_positive_scale():
    with pytest.raises(ValueError):
        transform_diagram(two_circles(), 0.0)


def test_perturbation_is_deterministic_and_keeps_triple_vertices():
    d = corpus.load_diagram("10_2")
    assert perturb_diagram(d, 3, 0.0) is d
    a = perturb_diagram(d, 3, 1e-4)
    b = perturb_diagram(d, 3, 1e-4)
    assert a.curves == b.curves
    assert a.curves != d.curves
    assert validate(a).valid, "shared offsets must keep triple vertices coincident"
    with pytest.raises(ValueError):
        perturb_diagram(d, 3, -1.0)


def mid_segment_triple_vertex():
    """10_3 with the green branch of triple vertex T moved inside a segment."""
    d = corpus.load_diagram("10_3")
    green = d.curves["green"]
    pts = [tuple(v) for v in green.vertices]
    centre = np.asarray(pts[40])
    half = (np.asarray(pts[41]) - centre) / 2.0
    pts[40], pts[41] = tuple(centre - half), tuple(centre + half)
    curves = dict(d.curves)
    curves["green"] = PLCurve(tuple(pts), True)
    vertices = tuple(
        replace(
            tv,
            incident=tuple(replace(inc, t=40.5 / 64) if inc.curve == "green" else inc for inc in tv.incident),
        )
        for tv in d.triple_vertices
    )
    return replace(d, curves=curves, triple_vertices=vertices)


@pytest.mark.parametrize("seed", [1, 2, 5, 17])
def test_perturbation_keeps_mid_segment_triple_vertex(seed):
    d = mid_segment_triple_vertex()
    for tv in d.triple_vertices:
        points = [eval_curve_wrapped(d.curves[inc.curve], inc.t) for inc in tv.incident]
        assert max(points[0].distance(p) for p in points) < 1e-12, "setup must start coincident"
    moved = perturb_diagram(d, seed, 1e-4)
    assert moved.curves["green"] != d.curves["green"]
    for tv in moved.triple_vertices:
        points = [eval_curve_wrapped(moved.curves[inc.curve], inc.t) for inc in tv.incident]
        gap = max(points[0].distance(p) for p in points)
        assert gap < 1e-12, f"{tv.id}: branches drift apart by {gap:.3g}"


def test_json_schema_names_sections():
    schema = diagram_json_schema()
    assert schema["title"] == "DeckerDiagram"
    assert {"name", "curves", "edges", "pairings", "triple_vertices", "note"} <= set(schema["properties"])


def test_shipped_schema_matches_model(repo_root):
    shipped = json.loads((repo_root / "docs" / "diagram.schema.json").read_text(encoding="utf-8"))
    live = diagram_json_schema()
    assert shipped["title"] == live["title"]
    assert set(shipped["properties"]) == set(live["properties"])
    assert set(shipped["$defs"]) == set(live["$defs"])
    for name, model in live["$defs"].items():
        assert set(shipped["$defs"][name]["properties"]) == set(model["properties"]), name
