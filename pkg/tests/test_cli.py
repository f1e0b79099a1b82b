import hashlib
import json
import os

import pytest

from knotmu import __version__
from knotmu.cli import EXIT_DEGENERATE, EXIT_INVALID, EXIT_OK, main
from knotmu.decker_model import DeckerDiagram, Edge, Label, Pairing, parse_diagram, serialize_diagram, validate
from knotmu.geom_core import PLCurve
from knotmu.reports import RunReport

pytestmark = pytest.mark.integration


@pytest.fixture(autouse=True)
def clean_env(tmp_path, monkeypatch):
    for var in list(os.environ):
        if var.startswith("KNOTMU_") and var != "KNOTMU_DATA":
            monkeypatch.delenv(var, raising=False)
    monkeypatch.chdir(tmp_path)


def squares(paired=True):
    sq = lambda cx: PLCurve(((cx - 0.2, -0.2), (cx + 0.2, -0.2), (cx + 0.2, 0.2), (cx - 0.2, 0.2)))
    edges = (Edge("a", "A", 0.0, 1.0, Label.OVER), Edge("b", "B", 0.0, 1.0, Label.UNDER))
    pairings = (Pairing("a", "b"),) if paired else ()
    return DeckerDiagram("squares", {"A": sq(-0.4), "B": sq(0.4)}, edges, pairings)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.mark.parametrize(
    "name,expected",
    [("0_1", "mu = 0 (n4=0, n2=0)"), ("8_1", "mu = 0 (n4=1, n2=3)"), ("10_2", "mu = 1 (n4=1, n2=0)")],
)
def test_mu2_text(name, expected, repo_root, capsys):
    assert main(["mu2", str(repo_root / "knots" / f"{name}.diagram")]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.splitlines()[0] == expected


def test_mu2_json_report(repo_root, capsys):
    path = repo_root / "knots" / "8_1.diagram"
    assert main(["--json", "mu2", str(path)]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["--json", "mu2", str(path)]) == EXIT_OK
    assert capsys.readouterr().out == first, "same input, same bytes"
    report = RunReport.from_json(first)
    assert report.success and report.parity == 0
    assert report.result["mu"] == 0 and report.result["n2"] == 3
    assert report.input.sha256 == hashlib.sha256(path.read_bytes()).hexdigest()
    assert "elapsed_seconds" not in json.loads(first)


def test_timing_flag(repo_root, capsys):
    assert main(["--json", "--timing", "mu2", str(repo_root / "knots" / "0_1.diagram")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["elapsed_seconds"] >= 0.0


def test_validate(repo_root, tmp_path, capsys):
    assert main(["validate", str(repo_root / "knots" / "10_3.diagram")]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "10_3: valid"

    bad = write(tmp_path, "bad.diagram", serialize_diagram(squares(paired=False)))
    assert main(["validate", bad]) == EXIT_INVALID
    out = capsys.readouterr().out
    assert out.startswith("squares: invalid")
    assert "unpaired-edge" in out


def test_invalid_and_malformed_input_exit_one(tmp_path, capsys):
    bad = write(tmp_path, "bad.diagram", serialize_diagram(squares(paired=False)))
    assert main(["mu2", bad]) == EXIT_INVALID
    assert "unpaired-edge" in capsys.readouterr().err

    broken = write(tmp_path, "broken.diagram", '{"name": "x",\n  "curves": [\n')
    assert main(["mu2", broken]) == EXIT_INVALID
    assert "error:" in capsys.readouterr().err

    assert main(["mu2", str(tmp_path / "missing.diagram")]) == EXIT_INVALID


def test_bad_tolerance_exits_one(repo_root, capsys):
    assert main(["--tol-eq", "-1", "mu2", str(repo_root / "knots" / "0_1.diagram")]) == EXIT_INVALID
    assert "eq_tol" in capsys.readouterr().err


def test_unresolved_degeneracy_exits_two(tmp_path, monkeypatch, capsys):
    diagram = squares()
    assert validate(diagram).valid
    path = write(tmp_path, "squares.diagram", serialize_diagram(diagram))
    monkeypatch.setenv("KNOTMU_MAX_RETRIES", "0")
    assert main(["--json", "mu2", path]) == EXIT_DEGENERATE
    data = json.loads(capsys.readouterr().out)
    assert data["success"] is False and "parity" not in data
    assert {e["pattern"] for e in data["degeneracies"]} == {"vertical-segment"}


def test_retry_resolves_by_default(tmp_path, capsys):
    path = write(tmp_path, "squares.diagram", serialize_diagram(squares()))
    assert main(["mu2", path]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("mu = 0")
    assert "perturbation retries" in out


def test_quad_unknot(repo_root, capsys):
    path = str(repo_root / "classical" / "unknot.knot")
    assert main(["quad", path]) == EXIT_OK
    assert "total = 0" in capsys.readouterr().out
    assert main(["quad", "--unsigned", path]) == EXIT_OK
    assert "count = 0, parity = 0" in capsys.readouterr().out


@pytest.mark.parametrize("name,c2", [("3_1", 1), ("4_1", -1), ("5_2", 2)])
def test_c2_both_formats(name, c2, repo_root, capsys):
    for suffix in (".gauss", ".pd"):
        assert main(["c2", str(repo_root / "classical" / f"{name}{suffix}")]) == EXIT_OK
        assert capsys.readouterr().out.splitlines()[0] == f"c2 = {c2}"


def test_c2_format_override(repo_root, tmp_path, capsys):
    text = (repo_root / "classical" / "4_1.pd").read_text(encoding="utf-8")
    path = write(tmp_path, "fig8.txt", text)
    assert main(["c2", "--format", "pd", path]) == EXIT_OK
    assert "c2 = -1" in capsys.readouterr().out


def test_perturb_writes_valid_diagram(repo_root, tmp_path, capsys):
    out = tmp_path / "moved.diagram"
    assert main(["--seed", "3", "--magnitude", "1e-4", "perturb", str(repo_root / "knots" / "10_2.diagram"), "-o", str(out)]) == EXIT_OK
    assert f"wrote {out}" in capsys.readouterr().out
    moved = parse_diagram(out.read_text(encoding="utf-8"))
    assert moved.name == "10_2"
    assert validate(moved).valid


def test_render(repo_root, tmp_path, capsys):
    pytest.importorskip("drawsvg")
    out = tmp_path / "svg" / "8_1.svg"
    assert main(["render", str(repo_root / "knots" / "8_1.diagram"), str(out), "--cycles", "--size", "320"]) == EXIT_OK
    assert out.exists() and "<svg" in out.read_text(encoding="utf-8")
    assert capsys.readouterr().out.strip() == f"wrote {out}"


def test_corpus_listing(capsys):
    assert main(["corpus"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "diagram 8_1" in out and "knot    3_1" in out
    assert main(["--json", "corpus"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["version"] == __version__
    assert len(data["entries"]) == 12


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out
