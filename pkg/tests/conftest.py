"""Pytest configuration and fixtures."""

import json
from pathlib import Path

import pytest

from flatfold_workbench import generators
from flatfold_workbench.config import get_settings
from flatfold_workbench.foldcore import Crease, CreasePattern, Label
from flatfold_workbench.flapsflips import FlapInstance, Hinge
from flatfold_workbench.gadgetlib import GridRouting
from flatfold_workbench.geometry import Point
from flatfold_workbench.ncl import Color, NclEdge, NclGraph


@pytest.fixture(autouse=True)
def reset_settings(monkeypatch):
    """Give every test fresh settings read from a clean environment."""
    for name in ("MAX_PLY", "FLAP_MAX", "FLAP_MAX_STATES", "NCL_MAX_EDGES", "GRID_UNIT"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def override_settings(monkeypatch):
    """Set environment-backed settings for one test."""

    def apply(**values):
        for key, value in values.items():
            monkeypatch.setenv(key, str(value))
        get_settings.cache_clear()
        return get_settings()

    return apply


@pytest.fixture
def unit_square():
    """Uncreased unit square."""
    return CreasePattern((Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)), ())


@pytest.fixture
def strip3():
    return generators.strip(3)


@pytest.fixture
def map2x2():
    return generators.grid_map(2, 2)


@pytest.fixture
def square_fan():
    """Four rays from the origin meeting the Kawasaki condition with unequal sectors."""
    return generators.fan([(1, 0), (3, 4), (-4, 3), (0, -1)])


@pytest.fixture
def offcenter_fold():
    """A 3x1 sheet folded at x = 1, so the folded image has two layers over part of it."""
    boundary = (Point(0, 0), Point(3, 0), Point(3, 1), Point(0, 1))
    return CreasePattern(boundary, (Crease(Point(1, 0), Point(1, 1), Label.V),))


@pytest.fixture
def lone_flap():
    return FlapInstance(side=1, flaps=(Hinge(Point(0, 0), Point(1, 0)),))


@pytest.fixture
def facing_flaps():
    """Two flaps whose squares overlap when both fold toward each other."""
    return FlapInstance(
        side=2,
        flaps=(Hinge(Point(0, 0), Point(0, 2)), Hinge(Point(3, 2), Point(3, 0))),
    )


@pytest.fixture
def and_vertex():
    """An AND vertex with three stub edges ending in terminals."""
    return NclGraph(
        vertices=(0, 1, 2, 3),
        edges=(
            NclEdge(0, 1, Color.BLUE),
            NclEdge(0, 2, Color.RED),
            NclEdge(0, 3, Color.RED),
        ),
        terminals=frozenset({1, 2, 3}),
    )


@pytest.fixture
def and_routing():
    """Blue stub west, red stubs north and south."""
    return GridRouting(
        points={0: (0, 0), 1: (-1, 0), 2: (0, 1), 3: (0, -1)},
        paths=(((0, 0), (-1, 0)), ((0, 0), (0, 1)), ((0, 0), (0, -1))),
    )


@pytest.fixture
def or_vertex():
    return NclGraph(
        vertices=(0, 1, 2, 3),
        edges=(
            NclEdge(0, 1, Color.BLUE),
            NclEdge(0, 2, Color.BLUE),
            NclEdge(0, 3, Color.BLUE),
        ),
        terminals=frozenset({1, 2, 3}),
    )


@pytest.fixture
def or_routing():
    return GridRouting(
        points={0: (0, 0), 1: (-1, 0), 2: (0, 1), 3: (1, 0)},
        paths=(((0, 0), (-1, 0)), ((0, 0), (0, 1)), ((0, 0), (1, 0))),
    )


@pytest.fixture
def red_wire():
    """A single red edge between two terminals."""
    return NclGraph(
        vertices=(0, 1), edges=(NclEdge(0, 1, Color.RED),), terminals=frozenset({0, 1})
    )


@pytest.fixture
def cube_matrix():
    return generators.cube()


@pytest.fixture
def write_json(tmp_path: Path):
    """Write a JSON document into the test's temporary directory."""

    def write(name: str, payload) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    return write
