"""Test the exact geometry kernel."""

from fractions import Fraction

import numpy as np
import pytest

from flatfold_workbench.errors import InvalidInput
from flatfold_workbench.geometry import (
    Line,
    LocationKind,
    Point,
    Segment,
    angle_cmp,
    as_rat,
    build_subdivision,
    convex_polygon_intersection,
    orientation,
    point_in_polygon,
    polygon_area,
    rat_pair,
    reflect,
    segment_intersection,
    segment_meets_convex,
    segments_cross_properly,
)

SQUARE = [Point(0, 0), Point(2, 0), Point(2, 2), Point(0, 2)]


class TestRationals:
    """Test rational parsing and serialization."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (3, Fraction(3)),
            ("1/3", Fraction(1, 3)),
            ("0.25", Fraction(1, 4)),
            ([2, 6], Fraction(1, 3)),
            (Fraction(5, 7), Fraction(5, 7)),
        ],
    )
    def test_as_rat_accepts_supported_forms(self, value, expected):
        """Test ints, strings, pairs and fractions parse exactly."""
        assert as_rat(value) == expected

    @pytest.mark.parametrize("value", [True, 1.5, "abc", [1, 0], [1, 2, 3]])
    def test_as_rat_rejects_other_values(self, value):
        """Test floats, booleans and malformed pairs are rejected."""
        with pytest.raises(InvalidInput):
            as_rat(value)

    def test_rat_pair_is_reduced(self):
        """Test serialization writes the reduced numerator and denominator."""
        assert rat_pair(Fraction(6, -4)) == [-3, 2]

    def test_point_coerces_coordinates(self):
        """Test points store fractions whatever they were built from."""
        p = Point("1/2", 3)
        assert p.x == Fraction(1, 2) and isinstance(p.y, Fraction)
        assert p.to_json() == [[1, 2], [3, 1]]


class TestPredicates:
    """Test orientation, lines and reflections."""

    def test_orientation_signs(self):
        """Test left turns, right turns and collinear triples."""
        o, a = Point(0, 0), Point(1, 0)
        assert orientation(o, a, Point(1, 1)) == 1
        assert orientation(o, a, Point(1, -1)) == -1
        assert orientation(o, a, Point(5, 0)) == 0

    def test_line_normalization_makes_equal_lines_equal(self):
        """Test the same line through different points compares equal."""
        assert Line.through(Point(0, 0), Point(2, 2)) == Line.through(Point(5, 5), Point(-1, -1))

    def test_reflect_across_diagonal(self):
        """Test reflection swaps coordinates across y = x."""
        assert reflect(Point(3, 1), Line.through(Point(0, 0), Point(1, 1))) == Point(1, 3)

    def test_angle_cmp_orders_counterclockwise(self):
        """Test directions sort by angle from the positive x axis."""
        east, north, west, south = (1, 0), (0, 1), (-1, 0), (0, -1)
        assert angle_cmp(east, north) < 0
        assert angle_cmp(west, south) < 0
        assert angle_cmp(south, east) > 0
        assert angle_cmp((2, 2), (1, 1)) == 0


class TestSegments:
    """Test segment intersection."""

    def test_crossing_segments_meet_in_a_point(self):
        """Test two diagonals of a square meet at its centre."""
        s = Segment(Point(0, 0), Point(2, 2))
        t = Segment(Point(0, 2), Point(2, 0))
        assert segment_intersection(s, t) == Point(1, 1)
        assert segments_cross_properly(s, t)

    def test_collinear_overlap_is_a_segment(self):
        """Test overlapping collinear segments return their common part."""
        s = Segment(Point(0, 0), Point(3, 0))
        hit = segment_intersection(s, Segment(Point(1, 0), Point(5, 0)))
        assert hit == Segment(Point(1, 0), Point(3, 0))

    def test_touching_at_an_endpoint_is_not_proper(self):
        """Test segments sharing an endpoint meet but do not cross properly."""
        s = Segment(Point(0, 0), Point(1, 0))
        t = Segment(Point(1, 0), Point(1, 1))
        assert segment_intersection(s, t) == Point(1, 0)
        assert not segments_cross_properly(s, t)

    def test_disjoint_segments(self):
        """Test parallel disjoint segments do not meet."""
        s = Segment(Point(0, 0), Point(1, 0))
        assert segment_intersection(s, Segment(Point(0, 1), Point(1, 1))) is None

    def test_degenerate_segment_rejected(self):
        """Test a segment needs two distinct endpoints."""
        with pytest.raises(InvalidInput):
            Segment(Point(1, 1), Point(1, 1))


class TestPolygons:
    """Test polygon measures and convex clipping."""

    def test_signed_area(self):
        """Test counterclockwise polygons have positive area."""
        assert polygon_area(SQUARE) == 4
        assert polygon_area(list(reversed(SQUARE))) == -4

    def test_point_in_polygon(self):
        """Test the crossing-number test on interior and exterior points."""
        assert point_in_polygon(Point(1, 1), SQUARE)
        assert not point_in_polygon(Point(3, 1), SQUARE)

    def test_convex_intersection_area(self):
        """Test two offset squares overlap in a unit square."""
        other = [Point(1, 1), Point(3, 1), Point(3, 3), Point(1, 3)]
        assert polygon_area(convex_polygon_intersection(SQUARE, other)) == 1

    def test_convex_intersection_touching_edge(self):
        """Test squares sharing only an edge intersect in that segment."""
        other = [Point(2, 0), Point(4, 0), Point(4, 2), Point(2, 2)]
        assert sorted(convex_polygon_intersection(SQUARE, other)) == [Point(2, 0), Point(2, 2)]

    def test_segment_meets_convex(self):
        """Test open segments crossing, touching and missing a square."""
        assert segment_meets_convex(SQUARE, Point(-1, 1), Point(3, 1))
        assert not segment_meets_convex(SQUARE, Point(3, 0), Point(3, 2))
        assert segment_meets_convex(SQUARE, Point(2, -1), Point(2, 3))


class TestSubdivision:
    """Test planar subdivisions of segment sets."""

    def test_square_with_diagonal(self):
        """Test a diagonal splits the square into two triangles."""
        ring = [Segment(SQUARE[i], SQUARE[(i + 1) % 4]) for i in range(4)]
        sub = build_subdivision(ring + [Segment(Point(0, 0), Point(2, 2))])
        assert len(sub.faces) == 3
        assert sub.euler_holds()
        assert sorted(sub.face_area(f) for f in range(1, 3)) == [2, 2]

    def test_crossing_segments_are_split(self):
        """Test two crossing diagonals create a vertex where they cross."""
        ring = [Segment(SQUARE[i], SQUARE[(i + 1) % 4]) for i in range(4)]
        diagonals = [Segment(Point(0, 0), Point(2, 2)), Segment(Point(0, 2), Point(2, 0))]
        sub = build_subdivision(ring + diagonals)
        assert Point(1, 1) in sub.vertex_index
        assert len(sub.faces) == 5
        assert sub.euler_holds()

    def test_locate(self):
        """Test points land on vertices, edges and faces."""
        ring = [Segment(SQUARE[i], SQUARE[(i + 1) % 4]) for i in range(4)]
        sub = build_subdivision(ring)
        assert sub.locate(Point(0, 0)).kind == LocationKind.VERTEX
        assert sub.locate(Point(1, 0)).kind == LocationKind.EDGE
        inside = sub.locate(Point(1, 1))
        assert inside.kind == LocationKind.FACE and inside.index != 0
        assert sub.locate(Point(5, 5)).index == 0

    def test_no_segments_is_one_face(self):
        """Test the empty segment set leaves the whole plane as one face."""
        sub = build_subdivision([])
        assert sub.vertices == ()
        assert sub.edges == ()
        assert len(sub.faces) == 1
        assert sub.euler_holds()
        assert sub.locate(Point(3, 4)) == sub.locate(Point(-1, 0))
        assert sub.locate(Point(3, 4)).kind == LocationKind.FACE


def random_segments(rng, n, span=6):
    """Up to ``n`` segments with integer endpoints in ``[0, span]^2``."""
    out = []
    while len(out) < n:
        x0, y0, x1, y1 = (int(v) for v in rng.integers(0, span + 1, size=4))
        if (x0, y0) != (x1, y1):
            out.append(Segment(Point(x0, y0), Point(x1, y1)))
    return out


def similarity(p):
    """Quarter turn, scale by 2/3, then shift by (5, -1/2)."""
    k = Fraction(2, 3)
    return Point(-p.y * k + 5, p.x * k - Fraction(1, 2))


def naive_kind(p, segments):
    """Classify a point against the raw segments without a subdivision."""
    on = [s for s in segments if s.contains(p)]
    if any(p in (s.a, s.b) for s in on) or len({s.line for s in on}) > 1:
        return LocationKind.VERTEX
    return LocationKind.EDGE if on else LocationKind.FACE


def naive_faces(p, sub):
    """Bounded faces whose outer cycle holds ``p`` and whose holes do not."""
    return [
        face.id
        for face in sub.faces[1:]
        if point_in_polygon(p, sub.cycle_points(face.boundary))
        and not any(point_in_polygon(p, sub.cycle_points(h)) for h in face.holes)
    ]


class TestGeometryProperties:
    """Test exactness and size bounds on random inputs."""

    @pytest.mark.parametrize("seed", range(5))
    def test_reflecting_twice_is_identity(self, seed):
        """Test a reflection undoes itself exactly."""
        rng = np.random.default_rng(seed)
        for _ in range(50):
            a, b, c, px, py = (int(v) for v in rng.integers(-9, 10, size=5))
            if a == 0 and b == 0:
                continue
            line = Line(a, b, Fraction(c, 7))
            p = Point(Fraction(px, 3), Fraction(py, 5))
            image = reflect(p, line)
            assert reflect(image, line) == p
            assert line.evaluate(image) == -line.evaluate(p)

    def test_reflect_across_vertical_line(self):
        """Test the origin mirrored across x = 1 lands on (2, 0)."""
        assert reflect(Point(0, 0), Line(1, 0, 1)) == Point(2, 0)

    def test_unit_square_and_far_translate_are_disjoint(self):
        """Test a square shifted by two of its sides no longer meets itself."""
        unit = [Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)]
        shifted = [p + Point(2, 0) for p in unit]
        assert convex_polygon_intersection(unit, shifted) == []

    def test_unit_square_and_half_translate_overlap(self):
        """Test a half-step shift leaves a half-width rectangle."""
        unit = [Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)]
        shifted = [p + Point(Fraction(1, 2), 0) for p in unit]
        overlap = convex_polygon_intersection(unit, shifted)
        assert polygon_area(overlap) == Fraction(1, 2)
        assert min(overlap) == Point(Fraction(1, 2), 0)

    @pytest.mark.parametrize("seed", range(8))
    def test_counts_grow_at_most_quadratically(self, seed):
        """Test vertex, edge and face counts stay within n squared bounds."""
        rng = np.random.default_rng(seed)
        for n in (1, 3, 6, 9):
            sub = build_subdivision(random_segments(rng, n))
            assert len(sub.vertices) <= 2 * n + n * (n - 1) // 2
            assert len(sub.edges) <= n * n
            assert len(sub.faces) <= n * n + 1
            assert sub.euler_holds()

    @pytest.mark.parametrize("seed", range(5))
    def test_similarity_keeps_the_subdivision(self, seed):
        """Test a rational similarity maps counts and areas exactly."""
        segments = random_segments(np.random.default_rng(seed), 6)
        moved = [Segment(similarity(s.a), similarity(s.b)) for s in segments]
        before, after = build_subdivision(segments), build_subdivision(moved)
        assert len(after.vertices) == len(before.vertices)
        assert len(after.edges) == len(before.edges)
        assert len(after.faces) == len(before.faces)
        assert after.components == before.components
        assert set(after.vertices) == {similarity(p) for p in before.vertices}
        areas = sorted(before.face_area(f) for f in range(1, len(before.faces)))
        scaled = sorted(after.face_area(f) for f in range(1, len(after.faces)))
        assert scaled == [a * Fraction(4, 9) for a in areas]

    @pytest.mark.parametrize("seed", range(5))
    def test_similarity_keeps_predicates(self, seed):
        """Test orientation and intersection commute with a similarity."""
        rng = np.random.default_rng(seed)
        for s, t in zip(random_segments(rng, 20), random_segments(rng, 20)):
            ms = Segment(similarity(s.a), similarity(s.b))
            mt = Segment(similarity(t.a), similarity(t.b))
            assert orientation(s.a, s.b, t.a) == orientation(ms.a, ms.b, mt.a)
            hit, moved_hit = segment_intersection(s, t), segment_intersection(ms, mt)
            if hit is None:
                assert moved_hit is None
            elif isinstance(hit, Point):
                assert moved_hit == similarity(hit)
            else:
                assert {moved_hit.a, moved_hit.b} == {similarity(hit.a), similarity(hit.b)}

    @pytest.mark.parametrize("seed", range(5))
    def test_locate_matches_naive_scan(self, seed):
        """Test point location agrees with checking every segment and face."""
        rng = np.random.default_rng(seed)
        segments = random_segments(rng, 6)
        sub = build_subdivision(segments)
        for _ in range(200):
            x, y = (int(v) for v in rng.integers(-3, 22, size=2))
            p = Point(Fraction(x, 3), Fraction(y, 3))
            loc = sub.locate(p)
            assert loc.kind == naive_kind(p, segments)
            if loc.kind == LocationKind.VERTEX:
                assert sub.vertices[loc.index] == p
            elif loc.kind == LocationKind.EDGE:
                assert sub.edge_segment(loc.index).contains_interior(p)
            else:
                expected = naive_faces(p, sub)
                assert expected == ([] if loc.index == 0 else [loc.index])
