"""Test SVG export."""

import xml.etree.ElementTree as ET

from flatfold_workbench.flapsflips import enumerate_states
from flatfold_workbench.foldcore import fold
from flatfold_workbench.gadgetlib import GridRouting, compile_ncl
from flatfold_workbench.ncl import Color
from flatfold_workbench.svg import (
    HINGE_COLORS,
    PLY_RAMP,
    arrangement_svg,
    compiled_svg,
    flaps_svg,
    ply_fill,
)


def _by_class(svg: str, name: str):
    root = ET.fromstring(svg)
    return [el for el in root.iter() if el.get("class") == name]


class TestArrangementSvg:
    """Test folded arrangement drawings."""

    def test_uncreased_square_has_one_cell(self, unit_square):
        """Test a bare sheet draws a single cell of one layer."""
        cells = _by_class(arrangement_svg(fold(unit_square)), "cell")
        assert len(cells) == 1
        assert cells[0].get("data-ply") == "1"

    def test_offcenter_fold_shades_by_ply(self, offcenter_fold):
        """Test the doubled and single parts get different fills."""
        cells = _by_class(arrangement_svg(fold(offcenter_fold)), "cell")
        assert sorted(c.get("data-ply") for c in cells) == ["1", "2"]
        assert len({c.get("fill") for c in cells}) == 2

    def test_output_is_deterministic(self, map2x2):
        """Test two renders of the same arrangement are identical."""
        assert arrangement_svg(fold(map2x2)) == arrangement_svg(fold(map2x2))

    def test_ply_ramp_clamps(self):
        """Test deep stacks reuse the darkest fill."""
        assert ply_fill(0) == PLY_RAMP[0]
        assert ply_fill(99) == PLY_RAMP[-1]


class TestFlapSvg:
    """Test flap and compiled layout drawings."""

    def test_outline_without_state(self, lone_flap):
        """Test both candidate squares are outlined when no state is given."""
        svg = flaps_svg(lone_flap)
        assert len(_by_class(svg, "flap")) == 2
        assert len(_by_class(svg, "hinge")) == 1

    def test_state_draws_one_square_per_flap(self, facing_flaps):
        """Test a state places every flap on its chosen side."""
        state = enumerate_states(facing_flaps)[-1]
        assert len(_by_class(flaps_svg(facing_flaps, state), "flap")) == 2

    def test_compiled_hinges_take_edge_colors(self, red_wire):
        """Test hinges of a red edge are drawn red with a mark per piece."""
        routing = GridRouting(
            points={0: (0, 0), 1: (1, 1)}, paths=(((0, 0), (1, 0), (1, 1)),)
        )
        svg = compiled_svg(compile_ncl(red_wire, routing, 7))
        hinges = _by_class(svg, "hinge")
        assert len(hinges) == 7
        assert {h.get("stroke") for h in hinges} == {HINGE_COLORS[Color.RED]}
        assert len(_by_class(svg, "piece")) == 1
