"""Test crease patterns, local flat foldings and folded arrangements."""

import networkx as nx
import pytest

from flatfold_workbench import generators
from flatfold_workbench.errors import InvalidCreasePattern, NoLocalFolding
from flatfold_workbench.foldcore import (
    BoundaryEnd,
    Crease,
    CreasePattern,
    FoldedPair,
    Label,
    SpanningPair,
    _paper_subdivision,
    _propagate_maps,
    build_local_flat_folding,
    cell_adjacency_graph,
    fold,
    ply,
    validate_pattern,
)
from flatfold_workbench.geometry import Point, polygon_area

BOUNDED = ["strip3", "map2x2", "offcenter_fold"]

SQUARE = (Point(0, 0), Point(2, 0), Point(2, 2), Point(0, 2))


class TestValidation:
    """Test crease pattern validation."""

    def test_clockwise_boundary_is_normalized(self):
        """Test a clockwise boundary comes back counterclockwise."""
        cp = validate_pattern(CreasePattern(tuple(reversed(SQUARE)), ()))
        assert polygon_area(cp.boundary) == 4

    def test_crossing_creases_rejected(self):
        """Test creases may only meet at shared endpoints."""
        cp = CreasePattern(
            SQUARE,
            (Crease(Point(0, 0), Point(2, 2)), Crease(Point(0, 2), Point(2, 0))),
        )
        with pytest.raises(InvalidCreasePattern):
            validate_pattern(cp)

    def test_crease_along_boundary_rejected(self):
        """Test a crease lying on a paper edge is rejected."""
        cp = CreasePattern(SQUARE, (Crease(Point(0, 0), Point(2, 0)),))
        with pytest.raises(InvalidCreasePattern):
            validate_pattern(cp)

    def test_crease_leaving_paper_rejected(self):
        """Test a crease must stay on the paper."""
        cp = CreasePattern(SQUARE, (Crease(Point(1, 1), Point(3, 1)),))
        with pytest.raises(InvalidCreasePattern):
            validate_pattern(cp)

    def test_rays_need_unbounded_sheet(self):
        """Test ray creases are refused on bounded paper."""
        cp = CreasePattern(SQUARE, (Crease(Point(1, 1), Point(2, 1), ray=True),))
        with pytest.raises(InvalidCreasePattern):
            validate_pattern(cp)

    def test_zero_length_crease_rejected(self):
        """Test a crease needs two distinct endpoints."""
        with pytest.raises(InvalidCreasePattern):
            Crease(Point(1, 1), Point(1, 1))


class TestLocalFlatFolding:
    """Test facet maps."""

    def test_uncreased_square_has_one_facet(self, unit_square):
        """Test a sheet without creases maps by the identity."""
        lff = build_local_flat_folding(unit_square)
        assert len(lff.facets) == 1
        assert lff.maps[lff.seed].parity == 1

    def test_strip_facets_alternate_parity(self, strip3):
        """Test neighbouring facets are mirror images."""
        lff = build_local_flat_folding(strip3)
        assert len(lff.facets) == 3
        ordered = sorted(lff.facets, key=lambda f: lff.paper.sample_points[f].x)
        parities = [lff.maps[f].parity for f in ordered]
        assert parities[0] == -parities[1] == parities[2]

    def test_dangling_crease_has_no_local_folding(self):
        """Test a crease ending inside the paper cannot fold flat."""
        cp = CreasePattern(SQUARE, (Crease(Point(0, 1), Point(1, 1)),))
        with pytest.raises(NoLocalFolding):
            build_local_flat_folding(cp)

    def test_non_kawasaki_vertex_has_no_local_folding(self):
        """Test a vertex whose alternate sectors do not sum to a half turn."""
        cp = generators.fan([(1, 0), (1, 1), (-1, 0), (0, -1)])
        with pytest.raises(NoLocalFolding):
            build_local_flat_folding(cp)


class TestArrangement:
    """Test folded arrangements and their cells."""

    def test_strip_folds_to_one_cell(self, strip3):
        """Test every square of a strip lands on the same cell."""
        fa = fold(strip3)
        covered = [c for c in fa.cells if fa.preimages[c]]
        assert len(covered) == 1
        assert ply(fa) == 3

    def test_map_cell_graph_is_an_edge(self, map2x2):
        """Test a folded map covers one cell next to the empty outside."""
        graph = cell_adjacency_graph(fold(map2x2))
        assert nx.is_isomorphic(graph, nx.complete_graph(2))

    def test_larger_map_cell_graph_is_an_edge(self):
        """Test the same holds for a 2x3 map."""
        fa = fold(generators.grid_map(2, 3))
        assert nx.is_isomorphic(fa.graph, nx.complete_graph(2))
        assert fa.ply == 6

    def test_offcenter_fold_has_two_covered_cells(self, offcenter_fold):
        """Test folding one third over gives a doubled and a single layer."""
        fa = fold(offcenter_fold)
        plies = sorted(len(fa.preimages[c]) for c in fa.cells if fa.preimages[c])
        assert plies == [1, 2]

    def test_fan_cell_graph_is_a_cycle(self, square_fan):
        """Test a single flat-foldable vertex has a cyclic cell graph."""
        fa = fold(square_fan)
        assert nx.is_isomorphic(fa.graph, nx.cycle_graph(4))

    def test_fold_events_record_the_crease(self, strip3):
        """Test folded pairs name the crease they fold around and carry its label."""
        labeled = strip3.with_labels([Label.M, Label.V])
        fa = fold(labeled)
        pairs = [ev for ee in fa.edge_events for ev in ee.events if isinstance(ev, FoldedPair)]
        assert {p.crease for p in pairs} == {0, 1}
        assert {p.label for p in pairs} == {Label.M, Label.V}

    def test_boundary_ends_appear_at_paper_edges(self, unit_square):
        """Test the uncreased square meets the outside only at boundary ends."""
        fa = fold(unit_square)
        events = [ev for ee in fa.edge_events for ev in ee.events]
        assert events and all(isinstance(ev, BoundaryEnd) for ev in events)


def moved(cp, motion):
    """Apply a point map to the boundary and every crease of a pattern."""
    boundary = None if cp.boundary is None else tuple(motion(p) for p in cp.boundary)
    creases = tuple(Crease(motion(c.a), motion(c.b), c.label, c.ray) for c in cp.creases)
    return CreasePattern(boundary, creases)


def quarter_turn(p):
    return Point(-p.y, p.x)


def turn_and_shift(p):
    return Point(-p.y + 3, p.x - 2)


def mirror(p):
    return Point(-p.x, p.y)


class TestFoldedInvariants:
    """Test properties every folded arrangement keeps."""

    @pytest.mark.parametrize("name", BOUNDED)
    def test_layers_cover_the_paper_area(self, name, request):
        """Test cell areas weighted by ply add up to the area of the sheet."""
        fa = fold(request.getfixturevalue(name))
        covered = sum(
            len(fa.preimages[c]) * fa.sub.face_area(c) for c in fa.cells if fa.preimages[c]
        )
        assert covered == polygon_area(fa.lff.pattern.boundary)

    @pytest.mark.parametrize("seed", range(6))
    def test_random_chords_cover_the_paper_area(self, seed):
        """Test the area identity on random straight creases."""
        fa = fold(generators.random_chords(3, seed=seed))
        covered = sum(
            len(fa.preimages[c]) * fa.sub.face_area(c) for c in fa.cells if fa.preimages[c]
        )
        assert covered == 16

    @pytest.mark.parametrize("name", BOUNDED + ["square_fan"])
    def test_events_partition_incident_layers(self, name, request):
        """Test every layer of a cell meets each of its edges exactly once."""
        fa = fold(request.getfixturevalue(name))
        for ee in fa.edge_events:
            if ee.cell_a == ee.cell_b:
                continue
            for side, cell in ((0, ee.cell_a), (1, ee.cell_b)):
                seen = []
                for ev in ee.events:
                    if isinstance(ev, SpanningPair):
                        seen.append(ev.facet)
                    elif isinstance(ev, FoldedPair) and ev.side == side:
                        seen.extend([ev.upright, ev.flipped])
                    elif isinstance(ev, BoundaryEnd) and ev.side == side:
                        seen.append(ev.facet)
                assert sorted(seen) == sorted(fa.preimages[cell])

    @pytest.mark.parametrize("name", BOUNDED)
    @pytest.mark.parametrize("motion", [quarter_turn, turn_and_shift, mirror])
    def test_rigid_motion_keeps_cell_graph(self, name, motion, request):
        """Test moving the sheet rigidly does not change the folded structure."""
        cp = request.getfixturevalue(name)
        before, after = fold(cp), fold(moved(cp, motion))
        assert nx.is_isomorphic(before.graph, after.graph)
        assert after.ply == before.ply
        assert sorted(len(p) for p in after.preimages.values()) == sorted(
            len(p) for p in before.preimages.values()
        )

    def test_turned_fan_keeps_its_cycle(self, square_fan):
        """Test a quarter turn of a fan still folds to a cycle of wedges."""
        fa = fold(moved(square_fan, quarter_turn))
        assert nx.is_isomorphic(fa.graph, fold(square_fan).graph)


class TestMapPropagation:
    """Test facet maps do not depend on where propagation starts."""

    @pytest.mark.parametrize("name", BOUNDED)
    def test_any_start_facet_gives_the_same_folding(self, name, request):
        """Test maps from another start differ only by that facet's own map."""
        cp = validate_pattern(request.getfixturevalue(name))
        paper, segments, kinds, owners = _paper_subdivision(cp, None)
        base = _propagate_maps(paper, segments, kinds, owners, 1)
        for start in base:
            maps = _propagate_maps(paper, segments, kinds, owners, start)
            assert set(maps) == set(base)
            back = base[start].inverse()
            for f, phi in maps.items():
                assert phi == back.compose(base[f])
                assert phi.parity == base[start].parity * base[f].parity

    def test_random_chords_from_every_start(self):
        """Test the same on a sheet with several random creases."""
        cp = validate_pattern(generators.random_chords(4, seed=2))
        paper, segments, kinds, owners = _paper_subdivision(cp, None)
        base = _propagate_maps(paper, segments, kinds, owners, 1)
        for start in base:
            maps = _propagate_maps(paper, segments, kinds, owners, start)
            back = base[start].inverse()
            assert all(phi == back.compose(base[f]) for f, phi in maps.items())
