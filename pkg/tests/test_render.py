import pytest

pytest.importorskip("drawsvg")

from knotmu import corpus
from knotmu.mu2_engine import mu2
from knotmu.render import DEFAULT_THEME, Theme, render_diagram, save_svg


def test_render_plain_diagram():
    svg = render_diagram(corpus.load_diagram("10_2"), size=320)
    assert svg.lstrip().startswith("<?xml") or svg.lstrip().startswith("<svg")
    assert DEFAULT_THEME.over in svg and DEFAULT_THEME.under in svg
    assert "10_2" in svg
    assert DEFAULT_THEME.four_cycle not in svg


def test_render_marks_cycles(settings):
    d = corpus.load_diagram("8_1")
    svg = render_diagram(d, mu2(d, settings))
    assert DEFAULT_THEME.four_cycle in svg
    assert DEFAULT_THEME.two_cycle in svg


def test_custom_theme_and_save(tmp_path):
    theme = Theme(over="#010203")
    svg = render_diagram(corpus.load_diagram("0_1"), theme=theme)
    assert "#010203" not in svg, "an empty diagram draws no edges"
    svg = render_diagram(corpus.load_diagram("8_1"), theme=theme)
    assert "#010203" in svg
    out = save_svg(svg, tmp_path / "nested" / "8_1.svg")
    assert out.read_text(encoding="utf-8") == svg


def test_render_shows_labels_and_pairings():
    d = corpus.load_diagram("10_1")
    svg = render_diagram(d)
    assert len(d.edges) == 8 and len(d.pairings) == 4
    assert svg.count(f'stroke="{DEFAULT_THEME.over}"') == 4, "one solid outline per over edge"
    assert svg.count(f'stroke="{DEFAULT_THEME.under}"') == 4, "one dashed outline per under edge"
    assert svg.count(">o</text>") == 4 and svg.count(">u</text>") == 4
    assert svg.count(f'stroke="{DEFAULT_THEME.pairing}"') == 4, "one arrow per pairing"
    assert svg.count("marker-end=") == 4
    assert "<marker" in svg
