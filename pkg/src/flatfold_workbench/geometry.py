"""Exact rational plane geometry and segment arrangements.

Every coordinate is a :class:`fractions.Fraction`; no predicate here ever rounds.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property, cmp_to_key
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import structlog

from .errors import InvalidInput

logger = structlog.get_logger(__name__)

Rat = Fraction


def as_rat(value: Any) -> Fraction:
    """Coerce an int, Fraction, decimal/fraction string or ``[num, den]`` pair."""
    if isinstance(value, bool):
        msg = f"Not a rational number: {value!r}"
        raise InvalidInput(msg)
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            msg = f"Not a rational number: {value!r}"
            raise InvalidInput(msg) from e
    if isinstance(value, (list, tuple)) and len(value) == 2:
        num, den = value
        if isinstance(num, int) and isinstance(den, int) and not isinstance(num, bool) and den != 0:
            return Fraction(num, den)
    msg = f"Not a rational number: {value!r}"
    raise InvalidInput(msg)


def rat_pair(value: Fraction) -> List[int]:
    """Serialize a rational as ``[num, den]``."""
    return [value.numerator, value.denominator]


@dataclass(frozen=True, order=True)
class Point:
    """A point with exact rational coordinates."""

    x: Fraction
    y: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", as_rat(self.x))
        object.__setattr__(self, "y", as_rat(self.y))

    def __add__(self, other: "Point") -> "Point":
        return Point(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point") -> "Point":
        return Point(self.x - other.x, self.y - other.y)

    def scale(self, k: Fraction) -> "Point":
        return Point(self.x * k, self.y * k)

    def as_floats(self) -> Tuple[float, float]:
        return float(self.x), float(self.y)

    def to_json(self) -> List[List[int]]:
        return [rat_pair(self.x), rat_pair(self.y)]


def cross(o: Point, a: Point, b: Point) -> Fraction:
    """Twice the signed area of triangle ``o a b``."""
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def orientation(o: Point, a: Point, b: Point) -> int:
    """+1 for a left turn, -1 for a right turn, 0 when collinear."""
    c = cross(o, a, b)
    return (c > 0) - (c < 0)


def midpoint(a: Point, b: Point) -> Point:
    return Point((a.x + b.x) / 2, (a.y + b.y) / 2)


def on_closed_segment(p: Point, a: Point, b: Point) -> bool:
    """Whether ``p`` lies on the closed segment ``ab``."""
    if cross(a, b, p) != 0:
        return False
    return min(a.x, b.x) <= p.x <= max(a.x, b.x) and min(a.y, b.y) <= p.y <= max(a.y, b.y)


def on_open_segment(p: Point, a: Point, b: Point) -> bool:
    """Whether ``p`` lies in the relative interior of segment ``ab``."""
    return p != a and p != b and on_closed_segment(p, a, b)


@dataclass(frozen=True)
class Line:
    """The line ``a*x + b*y = c``, normalized so the first nonzero of ``(a, b)`` is 1."""

    a: Fraction
    b: Fraction
    c: Fraction

    def __post_init__(self) -> None:
        a, b, c = as_rat(self.a), as_rat(self.b), as_rat(self.c)
        if a == 0 and b == 0:
            msg = "Degenerate line with zero normal"
            raise InvalidInput(msg)
        lead = a if a != 0 else b
        object.__setattr__(self, "a", a / lead)
        object.__setattr__(self, "b", b / lead)
        object.__setattr__(self, "c", c / lead)

    @classmethod
    def through(cls, p: Point, q: Point) -> "Line":
        if p == q:
            msg = f"Cannot build a line through one point {p}"
            raise InvalidInput(msg)
        a = q.y - p.y
        b = p.x - q.x
        return cls(a, b, a * p.x + b * p.y)

    def evaluate(self, p: Point) -> Fraction:
        return self.a * p.x + self.b * p.y - self.c

    def side(self, p: Point) -> int:
        v = self.evaluate(p)
        return (v > 0) - (v < 0)

    def intersect(self, other: "Line") -> Optional[Point]:
        det = self.a * other.b - other.a * self.b
        if det == 0:
            return None
        x = (self.c * other.b - other.c * self.b) / det
        y = (self.a * other.c - other.a * self.c) / det
        return Point(x, y)


@dataclass(frozen=True)
class Segment:
    """A closed segment between two distinct points."""

    a: Point
    b: Point

    def __post_init__(self) -> None:
        if self.a == self.b:
            msg = f"Segment endpoints coincide at {self.a}"
            raise InvalidInput(msg)

    @property
    def line(self) -> Line:
        return Line.through(self.a, self.b)

    @property
    def midpoint(self) -> Point:
        return midpoint(self.a, self.b)

    def contains(self, p: Point) -> bool:
        return on_closed_segment(p, self.a, self.b)

    def contains_interior(self, p: Point) -> bool:
        return on_open_segment(p, self.a, self.b)


def reflect(p: Point, line: Line) -> Point:
    """Mirror ``p`` across ``line``."""
    d = line.evaluate(p) / (line.a * line.a + line.b * line.b)
    return Point(p.x - 2 * line.a * d, p.y - 2 * line.b * d)


def segment_intersection(s: Segment, t: Segment) -> Union[None, Point, Segment]:
    """Intersection of two closed segments: nothing, a point, or a collinear overlap."""
    ls, lt = s.line, t.line
    if ls == lt:
        lo = max(min(s.a, s.b), min(t.a, t.b))
        hi = min(max(s.a, s.b), max(t.a, t.b))
        if lo < hi:
            return Segment(lo, hi)
        if lo == hi:
            return lo
        return None
    p = ls.intersect(lt)
    if p is None:
        return None
    if s.contains(p) and t.contains(p):
        return p
    return None


def segments_cross_properly(s: Segment, t: Segment) -> bool:
    """Whether the segments meet in a single point interior to both."""
    o1 = orientation(s.a, s.b, t.a)
    o2 = orientation(s.a, s.b, t.b)
    o3 = orientation(t.a, t.b, s.a)
    o4 = orientation(t.a, t.b, s.b)
    return o1 * o2 < 0 and o3 * o4 < 0


def polygon_area(poly: Sequence[Point]) -> Fraction:
    """Signed area, positive for counter-clockwise vertex order."""
    total = Fraction(0)
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        total += p.x * q.y - q.x * p.y
    return total / 2


def point_in_polygon(p: Point, poly: Sequence[Point]) -> bool:
    """Crossing-number test; ``p`` must not lie on the polygon boundary."""
    inside = False
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if (a.y > p.y) != (b.y > p.y):
            x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if p.x < x:
                inside = not inside
    return inside


def point_on_polygon_boundary(p: Point, poly: Sequence[Point]) -> bool:
    n = len(poly)
    return any(on_closed_segment(p, poly[i], poly[(i + 1) % n]) for i in range(n))


def _ccw(poly: Sequence[Point]) -> List[Point]:
    return list(poly) if polygon_area(poly) >= 0 else list(reversed(poly))


def _dedupe(points: List[Point]) -> List[Point]:
    out: List[Point] = []
    for p in points:
        if not out or out[-1] != p:
            out.append(p)
    while len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return out


def convex_polygon_intersection(P: Sequence[Point], Q: Sequence[Point]) -> List[Point]:
    """Exact intersection of two convex polygons.

    The result is a vertex list: empty, one point, two points (a segment) or a
    counter-clockwise polygon.
    """
    if not P or not Q:
        return []
    out = _ccw(P)
    clip = _ccw(Q)
    for i in range(len(clip)):
        a, b = clip[i], clip[(i + 1) % len(clip)]
        source = out
        out = []
        if not source:
            break
        for j in range(len(source)):
            p, q = source[j], source[(j + 1) % len(source)]
            cp, cq = cross(a, b, p), cross(a, b, q)
            if cp >= 0:
                out.append(p)
            if (cp > 0 and cq < 0) or (cp < 0 and cq > 0):
                t = cp / (cp - cq)
                out.append(Point(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)))
        out = _dedupe(out)
    if len(out) >= 3 and polygon_area(out) == 0:
        lo, hi = min(out), max(out)
        return [lo] if lo == hi else [lo, hi]
    return out


def segment_meets_convex(
    poly: Sequence[Point], a: Point, b: Point, open_segment: bool = True
) -> bool:
    """Whether the closed convex polygon meets segment ``ab``.

    With ``open_segment`` only the relative interior of the segment counts.
    """
    ring = _ccw(poly)
    dx, dy = b.x - a.x, b.y - a.y
    t0, t1 = Fraction(0), Fraction(1)
    for i in range(len(ring)):
        p, q = ring[i], ring[(i + 1) % len(ring)]
        ex, ey = q.x - p.x, q.y - p.y
        # inside the edge's half-plane when num + t * den >= 0
        num = ex * (a.y - p.y) - ey * (a.x - p.x)
        den = ex * dy - ey * dx
        if den == 0:
            if num < 0:
                return False
            continue
        t = -num / den
        if den > 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
    if t0 > t1:
        return False
    if open_segment:
        return t1 > 0 and t0 < 1
    return True


class LocationKind(str, Enum):
    """What a located point landed on."""

    VERTEX = "vertex"
    EDGE = "edge"
    FACE = "face"


@dataclass(frozen=True)
class Location:
    kind: LocationKind
    index: int


@dataclass(frozen=True)
class Edge:
    """An arrangement edge ``u -> v`` with the faces on either side of that direction."""

    u: int
    v: int
    left: int
    right: int


@dataclass(frozen=True)
class Face:
    """A face: its outer boundary walk (``None`` for the unbounded face) and hole walks."""

    id: int
    boundary: Optional[Tuple[int, ...]]
    holes: Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class Subdivision:
    """Planar subdivision induced by a set of segments. Face 0 is unbounded."""

    vertices: Tuple[Point, ...]
    edges: Tuple[Edge, ...]
    faces: Tuple[Face, ...]
    components: int

    @cached_property
    def vertex_index(self) -> Dict[Point, int]:
        return {p: i for i, p in enumerate(self.vertices)}

    def edge_segment(self, e: int) -> Segment:
        edge = self.edges[e]
        return Segment(self.vertices[edge.u], self.vertices[edge.v])

    def cycle_points(self, cycle: Sequence[int]) -> List[Point]:
        return [self.vertices[i] for i in cycle]

    def face_area(self, f: int) -> Optional[Fraction]:
        """Area of a bounded face (holes removed); ``None`` for the unbounded face."""
        face = self.faces[f]
        if face.boundary is None:
            return None
        area = polygon_area(self.cycle_points(face.boundary))
        for hole in face.holes:
            area -= abs(polygon_area(self.cycle_points(hole)))
        return area

    def euler_holds(self) -> bool:
        return len(self.vertices) - len(self.edges) + len(self.faces) == 1 + self.components

    def face_adjacency(self) -> Set[Tuple[int, int]]:
        pairs: Set[Tuple[int, int]] = set()
        for edge in self.edges:
            if edge.left != edge.right:
                pairs.add((min(edge.left, edge.right), max(edge.left, edge.right)))
        return pairs

    def locate(self, p: Point) -> Location:
        """Classify ``p`` as a vertex, an edge interior, or a face interior."""
        if p in self.vertex_index:
            return Location(LocationKind.VERTEX, self.vertex_index[p])
        for i, edge in enumerate(self.edges):
            if on_open_segment(p, self.vertices[edge.u], self.vertices[edge.v]):
                return Location(LocationKind.EDGE, i)
        return Location(LocationKind.FACE, self._containing_face(p))

    def _containing_face(self, p: Point) -> int:
        best = 0
        best_area: Optional[Fraction] = None
        for face in self.faces[1:]:
            assert face.boundary is not None
            poly = self.cycle_points(face.boundary)
            area = polygon_area(poly)
            if (best_area is None or area < best_area) and point_in_polygon(p, poly):
                best, best_area = face.id, area
        return best

    @cached_property
    def sample_points(self) -> Tuple[Point, ...]:
        """One point strictly inside each face, found by horizontal scanlines."""
        samples: Dict[int, Point] = {}
        if not self.vertices:
            return (Point(0, 0),)
        ys = sorted({v.y for v in self.vertices})
        samples[0] = Point(0, ys[-1] + 1)
        for y0, y1 in zip(ys, ys[1:]):
            if len(samples) == len(self.faces):
                break
            y = (y0 + y1) / 2
            xs: List[Fraction] = []
            for edge in self.edges:
                a, b = self.vertices[edge.u], self.vertices[edge.v]
                if (a.y < y) != (b.y < y):
                    xs.append(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y))
            xs.sort()
            for xa, xb in zip(xs, xs[1:]):
                if xa == xb:
                    continue
                q = Point((xa + xb) / 2, y)
                f = self._containing_face(q)
                samples.setdefault(f, q)
        return tuple(samples[f] for f in range(len(self.faces)))


def angle_cmp(d1: Tuple[Fraction, Fraction], d2: Tuple[Fraction, Fraction]) -> int:
    """Order directions counterclockwise starting from the positive x axis."""

    def half(d: Tuple[Fraction, Fraction]) -> int:
        return 0 if d[1] > 0 or (d[1] == 0 and d[0] > 0) else 1

    h1, h2 = half(d1), half(d2)
    if h1 != h2:
        return h1 - h2
    c = d1[0] * d2[1] - d1[1] * d2[0]
    return -1 if c > 0 else (1 if c < 0 else 0)


def _merge_collinear(segments: Iterable[Segment]) -> Tuple[List[Tuple[Point, Point]], Set[Point]]:
    """Group segments by supporting line and merge overlapping or touching pieces."""
    by_line: Dict[Line, List[Tuple[Point, Point]]] = {}
    endpoints: Set[Point] = set()
    for s in segments:
        lo, hi = min(s.a, s.b), max(s.a, s.b)
        by_line.setdefault(s.line, []).append((lo, hi))
        endpoints.update((lo, hi))

    pieces: List[Tuple[Point, Point]] = []
    for line in sorted(by_line, key=lambda l: (l.a, l.b, l.c)):
        intervals = sorted(by_line[line])
        cur_lo, cur_hi = intervals[0]
        for lo, hi in intervals[1:]:
            if lo <= cur_hi:
                cur_hi = max(cur_hi, hi)
            else:
                pieces.append((cur_lo, cur_hi))
                cur_lo, cur_hi = lo, hi
        pieces.append((cur_lo, cur_hi))
    return pieces, endpoints


def build_subdivision(segments: Sequence[Segment]) -> Subdivision:
    """Build the planar subdivision induced by ``segments``."""
    pieces, endpoints = _merge_collinear(segments)
    breaks: List[Set[Point]] = [{lo, hi} for lo, hi in pieces]
    for i, (lo, hi) in enumerate(pieces):
        for p in endpoints:
            if on_open_segment(p, lo, hi):
                breaks[i].add(p)
    lines = [Line.through(lo, hi) for lo, hi in pieces]
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            p = lines[i].intersect(lines[j])
            if p is None:
                continue
            if on_closed_segment(p, *pieces[i]) and on_closed_segment(p, *pieces[j]):
                breaks[i].add(p)
                breaks[j].add(p)

    vertices = tuple(sorted(set().union(*breaks))) if breaks else ()
    index = {p: i for i, p in enumerate(vertices)}
    raw_edges: List[Tuple[int, int]] = []
    for pts in breaks:
        ordered = sorted(pts)
        for p, q in zip(ordered, ordered[1:]):
            raw_edges.append((index[p], index[q]))
    raw_edges.sort()

    # Outgoing half-edges around each vertex in counter-clockwise order
    outgoing: Dict[int, List[int]] = {i: [] for i in range(len(vertices))}
    for u, v in raw_edges:
        outgoing[u].append(v)
        outgoing[v].append(u)
    for u, nbrs in outgoing.items():
        origin = vertices[u]
        nbrs.sort(
            key=cmp_to_key(
                lambda a, b: angle_cmp(
                    (vertices[a].x - origin.x, vertices[a].y - origin.y),
                    (vertices[b].x - origin.x, vertices[b].y - origin.y),
                )
            )
        )
    position = {(u, v): k for u, nbrs in outgoing.items() for k, v in enumerate(nbrs)}

    def successor(u: int, v: int) -> Tuple[int, int]:
        nbrs = outgoing[v]
        return v, nbrs[(position[(v, u)] - 1) % len(nbrs)]

    half_edges = sorted(position)
    cycle_of: Dict[Tuple[int, int], int] = {}
    cycles: List[List[int]] = []
    for start in half_edges:
        if start in cycle_of:
            continue
        walk: List[int] = []
        he = start
        while he not in cycle_of:
            cycle_of[he] = len(cycles)
            walk.append(he[0])
            he = successor(*he)
        cycles.append(walk)

    graph = nx.Graph()
    graph.add_nodes_from(range(len(vertices)))
    graph.add_edges_from(raw_edges)
    component_of: Dict[int, int] = {}
    for c, comp in enumerate(nx.connected_components(graph)):
        for node in comp:
            component_of[node] = c
    n_components = nx.number_connected_components(graph)

    areas = [polygon_area([vertices[i] for i in cyc]) for cyc in cycles]
    face_of_cycle: Dict[int, int] = {}
    bounded = [c for c in range(len(cycles)) if areas[c] > 0]
    for k, c in enumerate(bounded):
        face_of_cycle[c] = k + 1

    holes: Dict[int, List[Tuple[int, ...]]] = {f: [] for f in range(len(bounded) + 1)}
    for c, cyc in enumerate(cycles):
        if areas[c] > 0:
            continue
        anchor = vertices[cyc[0]]
        comp = component_of[cyc[0]]
        owner, owner_area = 0, None
        for b in bounded:
            if component_of[cycles[b][0]] == comp:
                continue
            poly = [vertices[i] for i in cycles[b]]
            if (owner_area is None or areas[b] < owner_area) and point_in_polygon(anchor, poly):
                owner, owner_area = face_of_cycle[b], areas[b]
        face_of_cycle[c] = owner
        holes[owner].append(tuple(cyc))

    faces = [Face(0, None, tuple(holes[0]))]
    for k, c in enumerate(bounded):
        faces.append(Face(k + 1, tuple(cycles[c]), tuple(holes[k + 1])))

    edges = tuple(
        Edge(u, v, face_of_cycle[cycle_of[(u, v)]], face_of_cycle[cycle_of[(v, u)]])
        for u, v in raw_edges
    )
    sub = Subdivision(
        vertices=vertices,
        edges=edges,
        faces=tuple(faces),
        components=n_components,
    )
    logger.debug(
        "Subdivision built",
        vertices=len(vertices),
        edges=len(edges),
        faces=len(faces),
        components=n_components,
    )
    return sub
