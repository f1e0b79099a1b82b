#!/usr/bin/env python3
"""MCP: knot-invariants

Overcrossing-cycle parity of 2-knot diagrams and classical knot checks,
exposed via MCP FastMCP over stdio.

Tools:
- compute_mu2(diagram)
- stable_mu2(diagram, trials=101)
- validate_diagram(diagram)
- count_quadrisecants(knot, signed=True)
- c2_from_gauss(code)
- alexander_from_pd(pd)
- render_diagram(diagram, with_cycles=False)
- list_corpus()

Inputs are file contents (diagram JSON, knot vertex lists, Gauss or PD
text), not paths.
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from mcp.server.fastmcp import FastMCP

from knotmu import corpus
from knotmu.config import load_settings
from knotmu.conway_oracle import (
    alexander_polynomial,
    c2_alexander,
    c2_gauss,
    conway_z2_coefficient,
    gauss_from_pd,
    parse_gauss,
    parse_pd,
    serialize_gauss,
)
from knotmu.decker_model import parse_diagram, validate
from knotmu.errors import UnresolvedDegeneracyError
from knotmu.mu2_engine import mu2, stable_mu2 as _stable_mu2
from knotmu.quadrisecant_engine import count_alternating_quadrisecants, parse_knot, validate_knot
from knotmu.render import render_diagram as _render_diagram

# Setup logging
log_dir = Path(os.environ.get("KNOTMU_LOG_DIR", Path.home() / ".knotmu-logs")).expanduser()
log_dir.mkdir(parents=True, exist_ok=True)

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(log_dir / "knot-invariants.log"),
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("knot-invariants")

mcp = FastMCP("knot-invariants")


# ------------------------------
# Helpers
# ------------------------------
def _failure(e: Exception) -> Dict[str, Any]:
    out: Dict[str, Any] = {"success": False, "error": str(e), "error_type": type(e).__name__}
    if isinstance(e, UnresolvedDegeneracyError):
        out["degeneracies"] = [ev.to_dict() for ev in e.events if hasattr(ev, "to_dict")]
    return out


# ------------------------------
# Tools
# ------------------------------
@mcp.tool()
async def compute_mu2(diagram: str) -> Dict[str, Any]:
    """Compute mu of a decker diagram given as JSON text.

    Returns mu, the 4-cycle and 2-cycle counts n4 and n2, the cycles found
    and any degeneracy/retry log.
    """
    try:
        d = parse_diagram(diagram)
        report = validate(d)
        if not report.valid:
            return {"success": False, "error": "invalid diagram", "validation": report.to_dict()}
        result = mu2(d, load_settings())
        logger.info("mu(%s) = %d", d.name, result.mu)
        return {"success": True, **result.to_dict()}
    except Exception as e:
        logger.error("compute_mu2 failed: %s", e)
        return _failure(e)


@mcp.tool()
async def stable_mu2(diagram: str, trials: int = 101) -> Dict[str, Any]:
    """Majority-vote mu over an odd number of perturbed copies of the diagram."""
    try:
        d = parse_diagram(diagram)
        report = validate(d)
        if not report.valid:
            return {"success": False, "error": "invalid diagram", "validation": report.to_dict()}
        result = _stable_mu2(d, trials=trials, settings=load_settings())
        return {"success": True, **result.to_dict()}
    except Exception as e:
        logger.error("stable_mu2 failed: %s", e)
        return _failure(e)


@mcp.tool()
async def validate_diagram(diagram: str) -> Dict[str, Any]:
    """Structural check of a decker diagram; lists every violation found."""
    try:
        report = validate(parse_diagram(diagram))
        return {"success": True, **report.to_dict()}
    except Exception as e:
        logger.error("validate_diagram failed: %s", e)
        return _failure(e)


@mcp.tool()
async def count_quadrisecants(knot: str, signed: bool = True) -> Dict[str, Any]:
    """Alternating quadrisecants of a polygonal knot (one vertex "x y z" per line).

    With signed=True the signed total is returned; it equals c2 of the knot.
    """
    try:
        k = parse_knot(knot)
        settings = load_settings()
        problems = validate_knot(k, settings)
        if problems:
            return {"success": False, "error": problems[0], "problems": problems}
        result = count_alternating_quadrisecants(k, settings, signed=signed)
        logger.info("Quadrisecants: count=%d total=%s", result.count, result.signed_total)
        return {"success": True, **result.to_dict()}
    except Exception as e:
        logger.error("count_quadrisecants failed: %s", e)
        return _failure(e)


@mcp.tool()
async def c2_from_gauss(code: str) -> Dict[str, Any]:
    """Second Conway coefficient from a signed Gauss code, e.g. "O1+ U2+ O3+ U1+ O2+ U3+"."""
    try:
        gd = parse_gauss(code)
        return {"success": True, "code": serialize_gauss(gd), "crossings": gd.n, "c2": c2_gauss(gd)}
    except Exception as e:
        logger.error("c2_from_gauss failed: %s", e)
        return _failure(e)


@mcp.tool()
async def alexander_from_pd(pd: str) -> Dict[str, Any]:
    """Normalized Alexander polynomial of a PD code, with c2 by two routes."""
    try:
        code = parse_pd(pd)
        delta = alexander_polynomial(code)
        gd = gauss_from_pd(code)
        return {
            "success": True,
            "alexander": str(delta),
            "coefficients": {str(k): v for k, v in delta.to_dict().items()},
            "c2_alexander": c2_alexander(delta),
            "c2_conway": conway_z2_coefficient(delta),
            "c2_gauss": c2_gauss(gd),
        }
    except Exception as e:
        logger.error("alexander_from_pd failed: %s", e)
        return _failure(e)


@mcp.tool()
async def render_diagram(diagram: str, with_cycles: bool = False) -> Dict[str, Any]:
    """SVG drawing of a decker diagram, optionally marking the cycles found by compute_mu2."""
    try:
        d = parse_diagram(diagram)
        result = mu2(d, load_settings()) if with_cycles else None
        out: Dict[str, Any] = {"success": True, "svg": _render_diagram(d, result)}
        if result is not None:
            out["mu"] = result.mu
        return out
    except Exception as e:
        logger.error("render_diagram failed: %s", e)
        return _failure(e)


@mcp.tool()
async def list_corpus() -> Dict[str, Any]:
    """Shipped diagrams and knots with their expected values."""
    try:
        return {"success": True, "entries": corpus.listing()}
    except Exception as e:
        logger.error("list_corpus failed: %s", e)
        return _failure(e)


if __name__ == "__main__":
    mcp.run(transport="stdio")
