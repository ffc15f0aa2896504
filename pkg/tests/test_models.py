"""Test the JSON file format models."""

from fractions import Fraction

import pytest
from pydantic import ValidationError

from flatfold_workbench import generators
from flatfold_workbench.bipyramid import circumradius, realize
from flatfold_workbench.foldcore import Label
from flatfold_workbench.gadgetlib import GadgetKind, make_gadget
from flatfold_workbench.geometry import Point
from flatfold_workbench.models import (
    BipyramidResultModel,
    CreasePatternModel,
    FlapInstanceModel,
    FlapStateModel,
    GadgetBlueprintModel,
    GridRoutingModel,
    NclGraphModel,
    OrientationModel,
)
from flatfold_workbench.ncl import Color


class TestCreasePatterns:
    """Test crease pattern documents."""

    def test_mixed_rational_forms(self):
        """Test integers, strings and pairs all parse to exact points."""
        doc = {
            "boundary": [[0, 0], ["2", 0], [[4, 2], 2], [0, "2.0"]],
            "creases": [{"a": [1, 0], "b": [1, 2], "label": "M"}],
        }
        cp = CreasePatternModel.model_validate(doc).to_engine()
        assert cp.boundary[2] == Point(2, 2)
        assert cp.creases[0].label == Label.M
        assert not cp.creases[0].ray

    def test_dump_writes_pairs(self):
        """Test coordinates are written as reduced numerator-denominator pairs."""
        cp = generators.strip(2, ["V"])
        dump = CreasePatternModel.from_engine(cp).model_dump(mode="json")
        assert dump["boundary"][1] == [[2, 1], [0, 1]]
        assert dump["creases"][0]["label"] == "V"
        assert CreasePatternModel.model_validate(dump).to_engine() == cp

    def test_unbounded_sheet(self):
        """Test a null boundary with ray creases."""
        doc = {"boundary": None, "creases": [{"a": [0, 0], "b": [1, 1], "ray": True}]}
        cp = CreasePatternModel.model_validate(doc).to_engine()
        assert cp.boundary is None
        assert cp.creases[0].ray

    @pytest.mark.parametrize(
        "doc",
        [
            {"boundary": [[0, 0]], "creases": [], "extra": 1},
            {"boundary": [[0, 0.5]], "creases": []},
            {"boundary": [["x", 0]], "creases": []},
            {"creases": []},
        ],
    )
    def test_bad_documents(self, doc):
        """Test unknown keys, floats, junk and missing boundaries are refused."""
        with pytest.raises(ValidationError):
            CreasePatternModel.model_validate(doc)


class TestFlapModels:
    """Test flap instance and state documents."""

    def test_instance(self, facing_flaps):
        """Test an instance survives a trip through JSON."""
        text = FlapInstanceModel.from_engine(facing_flaps).model_dump_json()
        assert FlapInstanceModel.model_validate_json(text).to_engine() == facing_flaps

    def test_state_orders_are_normalized(self):
        """Test a pair given high index first is stored low index first."""
        st = FlapStateModel.model_validate(
            {"sides": [1, 1], "orders": [[1, 0, "above"]]}
        ).to_engine()
        assert st.orders == ((0, 1, False),)
        assert st.above(1, 0) is True

    def test_state_rejects_bad_bits(self):
        """Test side bits are 0 or 1."""
        with pytest.raises(ValidationError):
            FlapStateModel.model_validate({"sides": [2]})


class TestNclModels:
    """Test NCL documents."""

    def test_graph(self, and_vertex):
        """Test terminals and colors are kept."""
        model = NclGraphModel.from_engine(and_vertex)
        assert model.terminals == [1, 2, 3]
        assert model.edges[0].color is Color.BLUE
        assert model.to_engine() == and_vertex

    def test_orientation(self):
        """Test orientations are bit lists."""
        assert OrientationModel.model_validate([0, 1, 1]).to_engine() == (0, 1, 1)
        with pytest.raises(ValidationError):
            OrientationModel.model_validate([0, 2])


class TestGadgetModels:
    """Test gadget documents."""

    def test_blueprint(self):
        """Test a blueprint dump converts back to the same piece."""
        bp = make_gadget(GadgetKind.TURN)
        model = GadgetBlueprintModel.from_engine(bp)
        assert model.side == 5
        assert model.to_engine() == bp

    def test_routing_keys_from_json(self, and_routing):
        """Test vertex ids written as JSON object keys parse back to integers."""
        text = (
            '{"points": {"0": [0, 0], "1": [-1, 0], "2": [0, 1], "3": [0, -1]},'
            ' "paths": [[[0, 0], [-1, 0]], [[0, 0], [0, 1]], [[0, 0], [0, -1]]]}'
        )
        routing = GridRoutingModel.model_validate_json(text).to_engine()
        assert routing == and_routing


class TestBipyramidModel:
    """Test the bipyramid result document."""

    def test_radius_only(self):
        """Test a radius result leaves the realization fields empty."""
        sides = [1.0, 1.0, 1.0]
        model = BipyramidResultModel.from_engine(sides, circumradius(sides))
        assert model.pole_edge is None
        assert len(model.angles) == 3

    def test_realized(self):
        """Test a realized body carries coordinates."""
        sides = [1.0, 1.0, 1.0]
        model = BipyramidResultModel.from_engine(sides, circumradius(sides), realize(sides, 1.0))
        assert model.pole_edge == 1.0
        assert len(model.equator) == 3
        assert model.s == pytest.approx(float(Fraction(2, 3)) ** 0.5)
