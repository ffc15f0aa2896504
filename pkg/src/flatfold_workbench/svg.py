"""SVG 1.1 export of folded arrangements, flap layouts and compiled gadgets.

Output is deterministic: elements are written in index order and every
coordinate is formatted with a fixed number of decimals.
"""

import xml.etree.ElementTree as ET
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import structlog

from .config import get_settings
from .flapsflips import FlapInstance, FlapState
from .foldcore import FoldedArrangement
from .gadgetlib import CompiledInstance
from .geometry import Point
from .ncl import Color

logger = structlog.get_logger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"

# Fill by number of layers; deeper stacks clamp to the last entry.
PLY_RAMP = ("#ffffff", "#e0e0e0", "#c0c0c0", "#a0a0a0", "#808080", "#606060", "#404040")
HINGE_COLORS = {Color.RED: "#c0392b", Color.BLUE: "#2c5aa0"}
MARGIN = 0.5


def ply_fill(ply: int) -> str:
    return PLY_RAMP[min(max(ply, 0), len(PLY_RAMP) - 1)]


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class _Canvas:
    """Collects shapes in model coordinates and flips y when writing."""

    def __init__(self, scale: float):
        self.scale = scale
        self.points: List[Tuple[float, float]] = []
        self.items: List[Tuple[str, Dict[str, str]]] = []

    def _xy(self, p: Tuple[float, float]) -> Tuple[str, str]:
        return _fmt(p[0] * self.scale), _fmt(-p[1] * self.scale)

    def polygon(self, rings: Sequence[Sequence[Tuple[float, float]]], **attrs: str) -> None:
        parts = []
        for ring in rings:
            self.points.extend(ring)
            coords = " L ".join(" ".join(self._xy(p)) for p in ring)
            parts.append(f"M {coords} Z")
        self.items.append(("path", {"d": " ".join(parts), "fill-rule": "evenodd", **attrs}))

    def line(self, a: Tuple[float, float], b: Tuple[float, float], **attrs: str) -> None:
        self.points.extend([a, b])
        (x1, y1), (x2, y2) = self._xy(a), self._xy(b)
        self.items.append(("line", {"x1": x1, "y1": y1, "x2": x2, "y2": y2, **attrs}))

    def circle(self, c: Tuple[float, float], r: float, **attrs: str) -> None:
        self.points.append(c)
        cx, cy = self._xy(c)
        self.items.append(("circle", {"cx": cx, "cy": cy, "r": _fmt(r * self.scale), **attrs}))

    def render(self) -> str:
        xs = [p[0] for p in self.points] or [0.0]
        ys = [p[1] for p in self.points] or [0.0]
        pad = MARGIN
        x0, x1 = (min(xs) - pad) * self.scale, (max(xs) + pad) * self.scale
        y0, y1 = (-max(ys) - pad) * self.scale, (-min(ys) + pad) * self.scale
        root = ET.Element(
            "svg",
            {
                "xmlns": SVG_NS,
                "version": "1.1",
                "width": _fmt(x1 - x0),
                "height": _fmt(y1 - y0),
                "viewBox": " ".join(_fmt(v) for v in (x0, y0, x1 - x0, y1 - y0)),
            },
        )
        for tag, attrs in self.items:
            ET.SubElement(root, tag, attrs)
        return ET.tostring(root, encoding="unicode") + "\n"


def _floats(points: Iterable[Point]) -> List[Tuple[float, float]]:
    return [p.as_floats() for p in points]


def arrangement_svg(fa: FoldedArrangement, scale: Optional[float] = None) -> str:
    """Bounded arrangement cells shaded by ply, with the crease images on top."""
    canvas = _Canvas(scale or get_settings().SVG_SCALE)
    sub = fa.sub
    for cell in fa.cells:
        face = sub.faces[cell]
        if face.boundary is None:
            continue
        rings = [_floats(sub.cycle_points(face.boundary))]
        rings += [_floats(sub.cycle_points(hole)) for hole in face.holes]
        ply = len(fa.preimages[cell])
        canvas.polygon(
            rings,
            fill=ply_fill(ply),
            stroke="none",
            **{"class": "cell", "data-cell": str(cell), "data-ply": str(ply)},
        )
    for ee in fa.edge_events:
        s = sub.edge_segment(ee.edge)
        canvas.line(s.a.as_floats(), s.b.as_floats(), stroke="#000000", **{"stroke-width": "1"})
    logger.debug("Arrangement rendered", cells=len(fa.cells))
    return canvas.render()


def _stacking(n: int, state: Optional[FlapState]) -> List[int]:
    """Flap indices bottom first; flaps above more others are drawn later."""
    if state is None:
        return list(range(n))
    above = [0] * n
    for i, j, bit in state.orders:
        above[i if bit else j] += 1
    return sorted(range(n), key=lambda f: (above[f], f))


def flaps_svg(
    inst: FlapInstance,
    state: Optional[FlapState] = None,
    hinge_colors: Optional[Dict[int, str]] = None,
    marks: Sequence[Tuple[float, float]] = (),
    scale: Optional[float] = None,
) -> str:
    """Flap squares with hinge marks.

    With a state each square is drawn on its side, shaded translucently and
    stacked bottom to top; without one both possible squares are outlined.
    """
    canvas = _Canvas(scale or get_settings().SVG_SCALE)
    colors = hinge_colors or {}
    for f in _stacking(len(inst.flaps), state):
        hinge = inst.flaps[f]
        sides = (state.sides[f],) if state is not None else (0, 1)
        for side in sides:
            square = _floats(hinge.square(side))
            if state is not None:
                attrs = {"fill": "#808080", "fill-opacity": "0.35", "stroke": "#000000"}
            else:
                attrs = {"fill": "none", "stroke": "#999999", "stroke-dasharray": "2 2"}
            canvas.polygon([square], **attrs, **{"class": "flap", "data-flap": str(f)})
    for f, hinge in enumerate(inst.flaps):
        canvas.line(
            hinge.a.as_floats(),
            hinge.b.as_floats(),
            stroke=colors.get(f, "#000000"),
            **{"stroke-width": "3", "class": "hinge", "data-flap": str(f)},
        )
    for c in marks:
        canvas.circle(c, 0.6, fill="#000000", **{"class": "piece"})
    return canvas.render()


def compiled_svg(compiled: CompiledInstance, state: Optional[FlapState] = None) -> str:
    """A compiled layout with hinges colored by the NCL edge they carry."""
    colors: Dict[int, str] = {}
    for gadget in compiled.edges:
        color = HINGE_COLORS[compiled.graph.edges[gadget.edge].color]
        for f in gadget.chain:
            colors.setdefault(f, color)
    unit = get_settings().GRID_UNIT
    marks = [(float(at[0] * unit), float(at[1] * unit)) for _, at in compiled.pieces]
    return flaps_svg(compiled.instance, state, colors, marks, scale=get_settings().SVG_SCALE / 10)
