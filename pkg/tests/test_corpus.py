from pathlib import Path

import pytest

from knotmu import corpus


def test_unknown_names_raise():
    with pytest.raises(KeyError):
        corpus.diagram_path("11_1")
    with pytest.raises(KeyError):
        corpus.knot_path("7_1", ".pd")


def test_every_listed_file_exists():
    rows = corpus.listing()
    assert {r["kind"] for r in rows} == {"diagram", "knot"}
    for row in rows:
        assert Path(row["path"]).exists(), row["path"]
    for name in corpus.KNOTS:
        for suffix in (".gauss", ".pd"):
            assert corpus.knot_path(name, suffix).exists()


def test_data_root_override(tmp_path, monkeypatch):
    monkeypatch.setenv(corpus.DATA_ENV, str(tmp_path))
    assert corpus.diagram_path("8_1") == tmp_path / "knots" / "8_1.diagram"
