import asyncio
import importlib.util
from pathlib import Path

import pytest

pytest.importorskip("mcp")

pytestmark = pytest.mark.integration

SERVER_PATH = Path(__file__).resolve().parent.parent / "MCP" / "knot-invariants.py"


@pytest.fixture(scope="module")
def server(tmp_path_factory):
    mp = pytest.MonkeyPatch()
    mp.setenv("KNOTMU_LOG_DIR", str(tmp_path_factory.mktemp("logs")))
    spec = importlib.util.spec_from_file_location("knot_invariants", SERVER_PATH)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    yield module
    mp.undo()


def test_compute_mu2(server, repo_root):
    text = (repo_root / "knots" / "10_2.diagram").read_text(encoding="utf-8")
    out = asyncio.run(server.compute_mu2(text))
    assert out["success"], out
    assert (out["mu"], out["n4"], out["n2"]) == (1, 1, 0)


def test_tool_errors_are_reported(server):
    out = asyncio.run(server.compute_mu2("{not json"))
    assert out["success"] is False
    assert out["error_type"] == "ParseError"


def test_c2_tools(server, repo_root):
    gauss = (repo_root / "classical" / "3_1.gauss").read_text(encoding="utf-8")
    out = asyncio.run(server.c2_from_gauss(gauss))
    assert out["success"] and out["c2"] == 1
    pd = (repo_root / "classical" / "4_1.pd").read_text(encoding="utf-8")
    out = asyncio.run(server.alexander_from_pd(pd))
    assert out["success"]
    assert out["c2_alexander"] == out["c2_conway"] == out["c2_gauss"] == -1


def test_list_corpus(server):
    out = asyncio.run(server.list_corpus())
    assert out["success"] and len(out["entries"]) == 12


def test_invalid_diagram_is_refused_by_every_mu_tool(server):
    from knotmu.decker_model import DeckerDiagram, Edge, Label, Pairing, circle_curve, serialize_diagram

    curves = {"A": circle_curve((-0.3, 0.0), 0.2, n=32), "B": circle_curve((0.3, 0.0), 0.2, n=32)}
    edges = (Edge("a", "A", 0.0, 1.0, Label.OVER), Edge("b", "B", 0.0, 1.0, Label.OVER))
    text = serialize_diagram(DeckerDiagram("both-over", curves, edges, (Pairing("a", "b"),)))
    single = asyncio.run(server.compute_mu2(text))
    voted = asyncio.run(server.stable_mu2(text, trials=3))
    for out in (single, voted):
        assert out["success"] is False and out["error"] == "invalid diagram", out
        assert "label-complementarity" in {v["kind"] for v in out["validation"]["violations"]}
