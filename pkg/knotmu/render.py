"""SVG drawings of decker diagrams with optional cycle overlays."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Optional, Tuple

from .decker_model import DeckerDiagram, Edge, EdgePoint, Label

logger = logging.getLogger("knotmu.render")


def _drawsvg():
    try:
        import drawsvg
    except ImportError as e:
        raise RuntimeError("drawsvg is required for rendering; install it with 'pip install drawsvg'") from e
    return drawsvg


@dataclass(frozen=True)
class Theme:
    background: str = "#ffffff"
    disk: str = "#9e9e9e"
    over: str = "#c62828"
    under: str = "#1565c0"
    triple_vertex: str = "#212121"
    four_cycle: str = "#2e7d32"
    two_cycle: str = "#ef6c00"
    pairing: str = "#6a1b9a"
    stroke_width: float = 2.0


DEFAULT_THEME = Theme()


class _Canvas:
    """Maps the square [-1.05, 1.05]^2 onto a size x size pixel canvas, x2 up."""

    margin = 1.05

    def __init__(self, size: int) -> None:
        self.size = size

    def px(self, x1: float, x2: float) -> Tuple[float, float]:
        scale = self.size / (2.0 * self.margin)
        return (x1 + self.margin) * scale, (self.margin - x2) * scale

    @property
    def unit(self) -> float:
        return self.size / (2.0 * self.margin)


def _edge_polyline(diagram: DeckerDiagram, edge: Edge) -> List[Tuple[float, float]]:
    curve = diagram.curves[edge.curve]
    n = curve.n_segments
    lams = {0.0, 1.0}
    for j in range(math.floor(edge.t0 * n) + 1, math.ceil((edge.t0 + edge.length) * n)):
        lam = (j / n - edge.t0) / edge.length
        if 0.0 < lam < 1.0:
            lams.add(lam)
    points = []
    for lam in sorted(lams):
        p = diagram.point(EdgePoint(edge.id, diagram.edge_param(edge, lam)))
        points.append((p.x1, p.x2))
    return points


def _edge_midpoint(diagram: DeckerDiagram, edge: Edge) -> Tuple[float, float]:
    p = diagram.point(EdgePoint(edge.id, diagram.edge_param(edge, 0.5)))
    return p.x1, p.x2


def render_diagram(
    diagram: DeckerDiagram,
    result: Optional[Any] = None,
    size: int = 640,
    theme: Theme = DEFAULT_THEME,
) -> str:
    """SVG text for a diagram.

    Over edges are solid and tagged "o", under edges dashed and tagged "u".
    Each pairing is a dotted arrow from the middle of its over edge to the
    middle of its under edge. When ``result`` (a MuResult) is given, the
    points of every 4-cycle and 2-cycle are marked and joined in cycle order.
    """
    draw = _drawsvg()
    canvas = _Canvas(size)
    d = draw.Drawing(size, size)
    d.append(draw.Rectangle(0, 0, size, size, fill=theme.background))
    cx, cy = canvas.px(0.0, 0.0)
    d.append(draw.Circle(cx, cy, canvas.unit, fill="none", stroke=theme.disk, stroke_width=1))

    for edge in diagram.edges:
        pts = _edge_polyline(diagram, edge)
        flat: List[float] = []
        for x1, x2 in pts:
            flat.extend(canvas.px(x1, x2))
        over = edge.label is Label.OVER
        d.append(
            draw.Lines(
                *flat,
                close=False,
                fill="none",
                stroke=theme.over if over else theme.under,
                stroke_width=theme.stroke_width,
                stroke_dasharray="none" if over else "6,4",
            )
        )
        mx, my = canvas.px(*_edge_midpoint(diagram, edge))
        d.append(draw.Text(edge.id, 10, mx + 4, my - 4, fill="#424242"))
        d.append(draw.Text("o" if over else "u", 11, mx + 4, my + 10, fill=theme.over if over else theme.under))

    if diagram.pairings:
        arrow = draw.Marker(-0.1, -0.51, 0.9, 0.5, scale=4, orient="auto")
        arrow.append(draw.Lines(-0.1, 0.5, -0.1, -0.5, 0.9, 0.0, fill=theme.pairing, close=True))
        for pairing in diagram.pairings:
            sx, sy = canvas.px(*_edge_midpoint(diagram, diagram.edge(pairing.over)))
            ex, ey = canvas.px(*_edge_midpoint(diagram, diagram.edge(pairing.under)))
            d.append(
                draw.Line(
                    sx, sy, ex, ey, stroke=theme.pairing, stroke_width=1, stroke_dasharray="1,3", marker_end=arrow
                )
            )

    for tv in diagram.triple_vertices:
        inc = tv.incident[0]
        p = diagram.point(EdgePoint(next(e.id for e in diagram.edges_on(inc.curve)), inc.t))
        x, y = canvas.px(p.x1, p.x2)
        d.append(draw.Circle(x, y, 4, fill=theme.triple_vertex))

    if result is not None:
        for cycles, color in ((result.four_cycles, theme.four_cycle), (result.two_cycles, theme.two_cycle)):
            for cycle in cycles:
                coords: List[float] = []
                for point in cycle.points:
                    x, y = canvas.px(point.xy.x1, point.xy.x2)
                    coords.extend((x, y))
                    d.append(draw.Circle(x, y, 5, fill="none", stroke=color, stroke_width=2))
                d.append(draw.Lines(*coords, close=True, fill="none", stroke=color, stroke_width=1, stroke_dasharray="2,3"))

    d.append(draw.Text(diagram.name, 14, 8, 18, fill="#212121"))
    logger.debug("Rendered %s: %d edges", diagram.name, len(diagram.edges))
    return d.as_svg()


def save_svg(svg: str, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")
    return path


__all__ = ["DEFAULT_THEME", "Theme", "render_diagram", "save_svg"]
