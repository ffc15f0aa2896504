"""Test the brute-force oracle and its agreement with the layer DP."""

from itertools import product

import pytest

from flatfold_workbench import generators
from flatfold_workbench.errors import BudgetExceeded
from flatfold_workbench.foldcore import Crease, CreasePattern, Label, fold
from flatfold_workbench.geometry import Point
from flatfold_workbench.layerdp import Mode, run_dp
from flatfold_workbench.oracle import (
    layering_space,
    oracle_check,
    oracle_count,
    oracle_decide,
    oracle_first,
    oracle_summary,
)


class TestOracle:
    """Test exhaustive enumeration."""

    def test_strip_count(self):
        """Test the oracle counts the same stamp foldings as the DP."""
        assert oracle_count(fold(generators.strip(4))) == 16

    def test_map_count(self, map2x2):
        """Test the oracle finds the eight foldings of a 2x2 map."""
        assert oracle_count(fold(map2x2)) == 8

    def test_layering_space(self, strip3):
        """Test the space is the product of per-cell factorials."""
        assert layering_space(fold(strip3)) == 6

    def test_first_witness_checks(self, map2x2):
        """Test the first valid layering passes the checker."""
        fa = fold(map2x2)
        first = oracle_first(fa)
        assert first is not None
        assert oracle_check(fa, first)

    def test_summary(self):
        """Test the one-pass summary agrees with the separate calls."""
        fa = fold(generators.grid_map(2, 2, ["M"] * 4))
        assert oracle_summary(fa) == (False, 0, None)
        assert not oracle_decide(fa)

    def test_checker_rejects_wrong_facets(self, strip3):
        """Test a layering must list exactly the facets covering each cell."""
        fa = fold(strip3)
        bad = {c: () for c in fa.cells}
        assert not oracle_check(fa, bad)

    def test_budget(self):
        """Test enumeration is refused past its budget."""
        with pytest.raises(BudgetExceeded):
            oracle_count(fold(generators.strip(5)), max_states=100)


class TestAgreement:
    """Test the DP against the oracle on generated instances."""

    @pytest.mark.parametrize("seed", range(6))
    def test_random_map_labelings(self, seed):
        """Test randomly labeled 2x2 maps."""
        fa = fold(generators.random_labeling(generators.grid_map(2, 2), seed=seed))
        dp = run_dp(fa)
        assert dp.count == oracle_count(fa)
        assert dp.foldable == oracle_decide(fa)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_strip_labelings(self, seed):
        """Test randomly labeled strips of five squares."""
        fa = fold(generators.random_labeling(generators.strip(5), seed=seed))
        assert run_dp(fa).count == oracle_count(fa)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_chords(self, seed):
        """Test sheets crossed by a pair of straight creases."""
        fa = fold(generators.random_chords(2, seed=seed))
        assert run_dp(fa).count == oracle_count(fa)

    def test_witness_agrees(self, map2x2):
        """Test a DP witness is one the oracle accepts."""
        fa = fold(map2x2)
        witness = run_dp(fa, mode=Mode.WITNESS).witness
        assert oracle_check(fa, witness)


@pytest.mark.slow
class TestCorpus:
    """Test the DP against the oracle on every labeling of small strips and maps."""

    @pytest.mark.parametrize("n", range(1, 6))
    def test_every_strip_labeling(self, n):
        """Test all labelings of a strip plus the unlabeled strip."""
        labelings = [None, *product("MV", repeat=n - 1)]
        for labels in labelings:
            fa = fold(generators.strip(n, labels))
            dp = run_dp(fa)
            assert (dp.foldable, dp.count) == (oracle_decide(fa), oracle_count(fa)), labels

    @pytest.mark.parametrize("rows,cols", [(2, 2), (2, 3)])
    def test_every_map_labeling(self, rows, cols):
        """Test all labelings of a small map."""
        creases = len(generators.grid_map(rows, cols).creases)
        for labels in product("MV", repeat=creases):
            fa = fold(generators.grid_map(rows, cols, labels))
            assert run_dp(fa).count == oracle_count(fa), labels

    @pytest.mark.parametrize("seed", range(5))
    def test_random_fans(self, seed):
        """Test degree-four vertices at random rational directions."""
        fa = fold(generators.random_fan(4, seed=seed))
        assert run_dp(fa).count == oracle_count(fa)

    @pytest.mark.parametrize("seed", [1, 2])
    def test_random_degree_six_fans(self, seed):
        """Test degree-six vertices whose layering space the oracle can cover."""
        cp = generators.random_fan(6, seed=seed)
        fa = fold(cp)
        assert run_dp(fa).count == oracle_count(fa) > 0
        labeled = fold(generators.random_labeling(cp, seed=seed))
        assert run_dp(labeled).count == oracle_count(labeled)

    @pytest.mark.parametrize(
        "directions",
        [
            [(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)],
            [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)],
            [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (0, -1)],
        ],
    )
    def test_octant_fans(self, directions):
        """Test six- and eight-crease vertices with rays on the octant directions."""
        fa = fold(generators.fan(directions))
        assert layering_space(fa) <= 10**6
        assert run_dp(fa).count == oracle_count(fa)

    @pytest.mark.parametrize("rows,cols", [(2, 2), (2, 3)])
    def test_unlabeled_maps(self, rows, cols):
        """Test unlabeled maps, where every crease may fold either way."""
        fa = fold(generators.grid_map(rows, cols))
        assert run_dp(fa).count == oracle_count(fa)

    @pytest.mark.parametrize("seed", range(50))
    @pytest.mark.parametrize("count", [2, 3, 4])
    def test_random_chords(self, count, seed):
        """Test random straight creases across a square, labeled and unlabeled."""
        fa = fold(generators.random_labeling(generators.random_chords(count, seed=seed), seed))
        for labeled in (True, False):
            dp = run_dp(fa, labeled=labeled)
            assert dp.foldable == oracle_decide(fa, labeled)
            assert dp.count == oracle_count(fa, labeled)


def swapped(cp):
    """The same pattern with every mountain and valley exchanged."""
    flip = {Label.M: Label.V, Label.V: Label.M, None: None}
    return cp.with_labels([flip[c.label] for c in cp.creases])


def mirrored(cp):
    """The pattern reflected across the y axis."""
    boundary = tuple(Point(-p.x, p.y) for p in cp.boundary)
    creases = tuple(
        Crease(Point(-c.a.x, c.a.y), Point(-c.b.x, c.b.y), c.label) for c in cp.creases
    )
    return CreasePattern(boundary, creases)


def labeled_corpus():
    yield from (generators.grid_map(2, 2, labels) for labels in product("MV", repeat=4))
    yield from (generators.strip(4, labels) for labels in product("MV", repeat=3))
    for seed in range(10):
        yield generators.random_labeling(generators.random_chords(3, seed=seed), seed)


class TestCorpusProperties:
    """Test symmetries every layering count must respect."""

    def test_labels_only_remove_layerings(self):
        """Test a labeled pattern never counts more than its unlabeled form."""
        for cp in labeled_corpus():
            fa = fold(cp)
            labeled, free = run_dp(fa).count, run_dp(fa, labeled=False).count
            assert labeled <= free
            assert free == run_dp(fold(cp.unlabeled())).count

    def test_swapping_labels_keeps_the_count(self):
        """Test turning the folded stack upside down exchanges mountains and valleys."""
        for cp in labeled_corpus():
            assert run_dp(fold(swapped(cp))).count == run_dp(fold(cp)).count

    def test_mirrored_sheet_keeps_the_count(self):
        """Test reflecting the sheet in the plane leaves the count unchanged."""
        for cp in labeled_corpus():
            assert run_dp(fold(mirrored(cp))).count == run_dp(fold(cp)).count
