"""Crease patterns, local flat foldings and folded arrangements.

A local flat folding assigns every facet of the paper a rigid map; adjacent
facets differ by the reflection across their shared crease. The folded
arrangement subdivides the plane by the images of all facet edges and records,
for every arrangement edge, how the layers on its two sides meet it.

Mountain/valley convention: the seed facet lies face-up. For two layers joined
by a crease, the layer whose facet keeps the seed orientation (``upright``) is
above its partner for a mountain fold and below it for a valley fold.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import structlog
from opentelemetry import trace

from .errors import InvalidCreasePattern, NoLocalFolding
from .geometry import (
    Line,
    LocationKind,
    Point,
    Segment,
    Subdivision,
    build_subdivision,
    midpoint,
    on_closed_segment,
    point_in_polygon,
    point_on_polygon_boundary,
    polygon_area,
    segment_intersection,
)
from .metrics import track_engine_metrics

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)


class Label(str, Enum):
    """Crease fold direction."""

    M = "M"
    V = "V"


@dataclass(frozen=True)
class Crease:
    """A crease segment ``a``-``b``, or a ray from ``a`` through ``b`` when ``ray`` is set."""

    a: Point
    b: Point
    label: Optional[Label] = None
    ray: bool = False

    def __post_init__(self) -> None:
        if self.a == self.b:
            msg = f"Crease endpoints coincide at {self.a}"
            raise InvalidCreasePattern(msg)


@dataclass(frozen=True)
class CreasePattern:
    """A paper region with creases; ``boundary=None`` is the whole plane."""

    boundary: Optional[Tuple[Point, ...]]
    creases: Tuple[Crease, ...]

    @property
    def bounded(self) -> bool:
        return self.boundary is not None

    def with_labels(self, labels: Sequence[Optional[Label]]) -> "CreasePattern":
        creases = tuple(
            Crease(c.a, c.b, label, c.ray) for c, label in zip(self.creases, labels)
        )
        return CreasePattern(self.boundary, creases)

    def unlabeled(self) -> "CreasePattern":
        return self.with_labels([None] * len(self.creases))


@dataclass(frozen=True)
class RigidMap:
    """The isometry ``(x, y) -> (a*x + b*y + tx, c*x + d*y + ty)``."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction
    tx: Fraction
    ty: Fraction

    @classmethod
    def identity(cls) -> "RigidMap":
        one, zero = Fraction(1), Fraction(0)
        return cls(one, zero, zero, one, zero, zero)

    @classmethod
    def reflection(cls, line: Line) -> "RigidMap":
        nn = line.a * line.a + line.b * line.b
        return cls(
            1 - 2 * line.a * line.a / nn,
            -2 * line.a * line.b / nn,
            -2 * line.a * line.b / nn,
            1 - 2 * line.b * line.b / nn,
            2 * line.c * line.a / nn,
            2 * line.c * line.b / nn,
        )

    @property
    def parity(self) -> int:
        return 1 if self.a * self.d - self.b * self.c > 0 else -1

    def apply(self, p: Point) -> Point:
        return Point(self.a * p.x + self.b * p.y + self.tx, self.c * p.x + self.d * p.y + self.ty)

    def apply_vector(self, dx: Fraction, dy: Fraction) -> Tuple[Fraction, Fraction]:
        return self.a * dx + self.b * dy, self.c * dx + self.d * dy

    def compose(self, other: "RigidMap") -> "RigidMap":
        """``self`` after ``other``."""
        return RigidMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.a * other.tx + self.b * other.ty + self.tx,
            self.c * other.tx + self.d * other.ty + self.ty,
        )

    def inverse(self) -> "RigidMap":
        # orthogonal linear part: inverse is the transpose
        return RigidMap(
            self.a,
            self.c,
            self.b,
            self.d,
            -(self.a * self.tx + self.c * self.ty),
            -(self.b * self.tx + self.d * self.ty),
        )


class EdgeKind(str, Enum):
    CREASE = "crease"
    BOUNDARY = "boundary"
    FRAME = "frame"


@dataclass(frozen=True)
class LocalFlatFolding:
    """Per-facet rigid maps for a crease pattern."""

    pattern: CreasePattern
    paper: Subdivision
    facets: Tuple[int, ...]
    maps: Dict[int, RigidMap]
    edge_kind: Tuple[EdgeKind, ...]
    edge_crease: Tuple[Optional[int], ...]
    seed: int
    image_frame: Optional[Fraction] = None


@dataclass(frozen=True)
class SpanningPair:
    """A facet whose layer continues across the arrangement edge."""

    facet: int


@dataclass(frozen=True)
class FoldedPair:
    """Two layers on one side of the edge joined by a crease lying along it."""

    side: int
    upright: int
    flipped: int
    crease: int
    label: Optional[Label]


@dataclass(frozen=True)
class BoundaryEnd:
    """A layer on one side of the edge that ends at the paper boundary."""

    side: int
    facet: int


CreaseEvent = Union[SpanningPair, FoldedPair, BoundaryEnd]


@dataclass(frozen=True)
class EdgeEvents:
    """Events along one arrangement edge; side 0 is ``cell_a``, side 1 is ``cell_b``."""

    edge: int
    cell_a: int
    cell_b: int
    events: Tuple[CreaseEvent, ...]


@dataclass(frozen=True)
class FoldedArrangement:
    """Arrangement of facet-edge images with per-cell preimages and per-edge events."""

    lff: LocalFlatFolding
    sub: Subdivision
    cells: Tuple[int, ...]
    preimages: Dict[int, Tuple[int, ...]]
    edge_events: Tuple[EdgeEvents, ...]
    cell_edges: Dict[int, Tuple[int, ...]] = field(default_factory=dict)

    @property
    def ply(self) -> int:
        return max((len(p) for p in self.preimages.values()), default=0)

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.cells)
        for ee in self.edge_events:
            if ee.cell_a != ee.cell_b:
                g.add_edge(ee.cell_a, ee.cell_b)
        return g

    def events_between(self, a: int, b: int) -> List[EdgeEvents]:
        """Edge event lists for arrangement edges joining cells ``a`` and ``b``."""
        return [
            ee
            for ee in self.edge_events
            if (ee.cell_a, ee.cell_b) in ((a, b), (b, a))
        ]


def _box(m: Fraction) -> Tuple[Point, ...]:
    return (Point(-m, -m), Point(m, -m), Point(m, m), Point(-m, m))


def _sup_norm(p: Point) -> Fraction:
    return max(abs(p.x), abs(p.y))


def _crease_lines(creases: Sequence[Crease]) -> List[Line]:
    return [Line.through(c.a, c.b) for c in creases]


def _finite_extent(creases: Sequence[Crease]) -> Fraction:
    """Sup-norm bound on every crease endpoint and pairwise crease-line intersection."""
    bound = Fraction(0)
    for c in creases:
        bound = max(bound, _sup_norm(c.a), _sup_norm(c.b))
    lines = _crease_lines(creases)
    for l1, l2 in combinations(set(lines), 2):
        p = l1.intersect(l2)
        if p is not None:
            bound = max(bound, _sup_norm(p))
    return bound


def _ray_exit(a: Point, b: Point, m: Fraction) -> Point:
    dx, dy = b.x - a.x, b.y - a.y
    ts = []
    if dx > 0:
        ts.append((m - a.x) / dx)
    elif dx < 0:
        ts.append((-m - a.x) / dx)
    if dy > 0:
        ts.append((m - a.y) / dy)
    elif dy < 0:
        ts.append((-m - a.y) / dy)
    t = min(ts)
    return Point(a.x + t * dx, a.y + t * dy)


def clip_to_box(s: Segment, m: Fraction) -> Optional[Segment]:
    """Clip a segment to the square ``[-m, m]^2``."""
    t0, t1 = Fraction(0), Fraction(1)
    dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
    for p, q in ((-dx, s.a.x + m), (dx, m - s.a.x), (-dy, s.a.y + m), (dy, m - s.a.y)):
        if p == 0:
            if q < 0:
                return None
            continue
        t = q / p
        if p < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
    if t0 >= t1:
        return None
    return Segment(
        Point(s.a.x + t0 * dx, s.a.y + t0 * dy),
        Point(s.a.x + t1 * dx, s.a.y + t1 * dy),
    )


def crease_segments(cp: CreasePattern, box: Optional[Fraction] = None) -> List[Segment]:
    """Crease segments, with rays cut at the square ``[-box, box]^2``."""
    out = []
    for c in cp.creases:
        if c.ray:
            if box is None:
                msg = "Ray creases need a clipping box"
                raise InvalidCreasePattern(msg)
            out.append(Segment(c.a, _ray_exit(c.a, c.b, box)))
        else:
            out.append(Segment(c.a, c.b))
    return out


def _normalized_boundary(boundary: Sequence[Point]) -> Tuple[Point, ...]:
    pts = list(boundary)
    if len(pts) < 3:
        msg = "Boundary polygon needs at least three vertices"
        raise InvalidCreasePattern(msg)
    area = polygon_area(pts)
    if area == 0:
        msg = "Boundary polygon has zero area"
        raise InvalidCreasePattern(msg)
    if area < 0:
        pts.reverse()
    n = len(pts)
    edges = [Segment(pts[i], pts[(i + 1) % n]) for i in range(n)]
    for i, j in combinations(range(n), 2):
        hit = segment_intersection(edges[i], edges[j])
        if hit is None:
            continue
        adjacent = j == i + 1 or (i == 0 and j == n - 1)
        shared = pts[j] if j == i + 1 else pts[i]
        if not adjacent or hit != shared:
            msg = f"Boundary polygon is not simple at edges {i} and {j}"
            raise InvalidCreasePattern(msg)
    return tuple(pts)


def validate_pattern(cp: CreasePattern) -> CreasePattern:
    """Check crease and boundary rules; returns the pattern with a CCW boundary."""
    boundary: Optional[Tuple[Point, ...]] = None
    if cp.boundary is not None:
        boundary = _normalized_boundary(cp.boundary)
        if any(c.ray for c in cp.creases):
            msg = "Ray creases require an unbounded sheet"
            raise InvalidCreasePattern(msg)
        segments = crease_segments(cp)
    else:
        segments = crease_segments(cp, _finite_extent(cp.creases) + 1)

    for i, j in combinations(range(len(segments)), 2):
        s, t = segments[i], segments[j]
        hit = segment_intersection(s, t)
        if hit is None:
            continue
        if isinstance(hit, Segment) or hit not in (s.a, s.b) or hit not in (t.a, t.b):
            msg = f"Creases {i} and {j} intersect away from a shared endpoint"
            raise InvalidCreasePattern(msg)

    if boundary is not None:
        n = len(boundary)
        edges = [Segment(boundary[k], boundary[(k + 1) % n]) for k in range(n)]
        for i, s in enumerate(segments):
            stops: Set[Point] = {s.a, s.b}
            for e in edges:
                hit = segment_intersection(s, e)
                if isinstance(hit, Segment):
                    msg = f"Crease {i} runs along the paper boundary"
                    raise InvalidCreasePattern(msg)
                if hit is not None:
                    stops.add(hit)
            ordered = sorted(stops)
            for p, q in zip(ordered, ordered[1:]):
                m = midpoint(p, q)
                if point_on_polygon_boundary(m, boundary) or not point_in_polygon(m, boundary):
                    msg = f"Crease {i} leaves the paper"
                    raise InvalidCreasePattern(msg)
    return CreasePattern(boundary, cp.creases)


def _paper_subdivision(
    cp: CreasePattern, box: Optional[Fraction]
) -> Tuple[Subdivision, List[Segment], Tuple[EdgeKind, ...], Tuple[Optional[int], ...]]:
    segments = crease_segments(cp, box)
    outline = cp.boundary if cp.boundary is not None else _box(box or Fraction(1))
    n = len(outline)
    rim = [Segment(outline[k], outline[(k + 1) % n]) for k in range(n)]
    paper = build_subdivision(segments + rim)

    kinds: List[EdgeKind] = []
    owners: List[Optional[int]] = []
    for e in range(len(paper.edges)):
        m = paper.edge_segment(e).midpoint
        owner = next((i for i, s in enumerate(segments) if on_closed_segment(m, s.a, s.b)), None)
        owners.append(owner)
        if owner is not None:
            kinds.append(EdgeKind.CREASE)
        else:
            kinds.append(EdgeKind.BOUNDARY if cp.boundary is not None else EdgeKind.FRAME)
    return paper, segments, tuple(kinds), tuple(owners)


def _propagate_maps(
    paper: Subdivision,
    segments: Sequence[Segment],
    kinds: Sequence[EdgeKind],
    owners: Sequence[Optional[int]],
    seed: int,
) -> Dict[int, RigidMap]:
    across: Dict[int, List[Tuple[int, int]]] = {f: [] for f in range(1, len(paper.faces))}
    for e, edge in enumerate(paper.edges):
        if kinds[e] != EdgeKind.CREASE:
            continue
        crease = owners[e]
        assert crease is not None
        if edge.left == edge.right:
            msg = f"Facet {edge.left} meets itself across crease {crease}"
            raise NoLocalFolding(msg)
        across[edge.left].append((edge.right, crease))
        across[edge.right].append((edge.left, crease))

    reflections = {i: RigidMap.reflection(s.line) for i, s in enumerate(segments)}
    maps: Dict[int, RigidMap] = {seed: RigidMap.identity()}
    queue = deque([seed])
    while queue:
        f = queue.popleft()
        for g, crease in across[f]:
            candidate = maps[f].compose(reflections[crease])
            if g not in maps:
                maps[g] = candidate
                queue.append(g)
            elif maps[g] != candidate:
                msg = f"Facet {g} reached with inconsistent maps across crease {crease}"
                raise NoLocalFolding(msg)
    return maps


@track_engine_metrics("local_flat_folding")
def build_local_flat_folding(cp: CreasePattern) -> LocalFlatFolding:
    """Assign each facet a rigid map by reflecting across creases from a seed facet."""
    cp = validate_pattern(cp)
    if cp.boundary is not None:
        paper, segments, kinds, owners = _paper_subdivision(cp, None)
        maps = _propagate_maps(paper, segments, kinds, owners, 1)
        lff = LocalFlatFolding(
            pattern=cp,
            paper=paper,
            facets=tuple(range(1, len(paper.faces))),
            maps=maps,
            edge_kind=kinds,
            edge_crease=owners,
            seed=1,
        )
        logger.debug("Local flat folding built", facets=len(lff.facets), creases=len(cp.creases))
        return lff

    # Unbounded sheet: size a paper box so everything outside maps outside the image frame
    m0 = _finite_extent(cp.creases) + 1
    paper, segments, kinds, owners = _paper_subdivision(cp, m0)
    maps = _propagate_maps(paper, segments, kinds, owners, 1)
    seed_point = paper.sample_points[1]

    finite = [c.a for c in cp.creases] + [c.b for c in cp.creases if not c.ray]
    bound = Fraction(0)
    for f, phi in maps.items():
        for p in finite:
            bound = max(bound, _sup_norm(phi.apply(p)))
    image_lines: Set[Line] = set()
    for e, edge in enumerate(paper.edges):
        if kinds[e] == EdgeKind.CREASE:
            s = paper.edge_segment(e)
            phi = maps[edge.left]
            image_lines.add(Line.through(phi.apply(s.a), phi.apply(s.b)))
    for l1, l2 in combinations(image_lines, 2):
        p = l1.intersect(l2)
        if p is not None:
            bound = max(bound, _sup_norm(p))
    frame = bound + 1
    shift = max((abs(phi.tx) + abs(phi.ty) for phi in maps.values()), default=Fraction(0))
    box = max(m0, 2 * frame + shift + 1)

    paper, segments, kinds, owners = _paper_subdivision(cp, box)
    located = paper.locate(seed_point)
    seed = located.index
    maps = _propagate_maps(paper, segments, kinds, owners, seed)
    lff = LocalFlatFolding(
        pattern=cp,
        paper=paper,
        facets=tuple(range(1, len(paper.faces))),
        maps=maps,
        edge_kind=kinds,
        edge_crease=owners,
        seed=seed,
        image_frame=frame,
    )
    logger.debug(
        "Local flat folding built",
        facets=len(lff.facets),
        creases=len(cp.creases),
        paper_box=str(box),
        image_frame=str(frame),
    )
    return lff


def _side_of(image_dir: Tuple[Fraction, Fraction], u: Point, v: Point) -> int:
    """0 if the direction points left of ``u -> v``, else 1."""
    c = (v.x - u.x) * image_dir[1] - (v.y - u.y) * image_dir[0]
    return 0 if c > 0 else 1


@track_engine_metrics("fold_arrangement")
def fold_arrangement(cp: CreasePattern, lff: LocalFlatFolding) -> FoldedArrangement:
    """Build the arrangement of folded facet edges with preimages and edge events."""
    with tracer.start_as_current_span("fold_arrangement") as span:
        paper = lff.paper
        frame = lff.image_frame
        images: List[Segment] = []
        for e, edge in enumerate(paper.edges):
            kind = lff.edge_kind[e]
            if kind == EdgeKind.FRAME:
                continue
            f = edge.left if edge.left != 0 else edge.right
            s = paper.edge_segment(e)
            phi = lff.maps[f]
            image = Segment(phi.apply(s.a), phi.apply(s.b))
            clipped = clip_to_box(image, frame) if frame is not None else image
            if clipped is not None:
                images.append(clipped)
        if frame is not None:
            corners = _box(frame)
            images.extend(Segment(corners[k], corners[(k + 1) % 4]) for k in range(4))
        sub = build_subdivision(images)

        if frame is None:
            cells = tuple(range(len(sub.faces)))
        else:
            cells = tuple(range(1, len(sub.faces)))

        inverses = {f: lff.maps[f].inverse() for f in lff.facets}
        preimages: Dict[int, Tuple[int, ...]] = {}
        for cell in cells:
            sample = sub.sample_points[cell]
            covering = []
            for f in lff.facets:
                loc = paper.locate(inverses[f].apply(sample))
                if loc.kind == LocationKind.FACE and loc.index == f:
                    covering.append(f)
            preimages[cell] = tuple(covering)

        edge_events: List[EdgeEvents] = []
        cell_edges: Dict[int, List[int]] = {c: [] for c in cells}
        for ae, aedge in enumerate(sub.edges):
            if frame is not None and 0 in (aedge.left, aedge.right):
                continue
            u, v = sub.vertices[aedge.u], sub.vertices[aedge.v]
            m = midpoint(u, v)
            events = _edge_events(cp, lff, inverses, m, u, v)
            edge_events.append(EdgeEvents(ae, aedge.left, aedge.right, tuple(events)))
            cell_edges[aedge.left].append(len(edge_events) - 1)
            if aedge.right != aedge.left:
                cell_edges[aedge.right].append(len(edge_events) - 1)

        fa = FoldedArrangement(
            lff=lff,
            sub=sub,
            cells=cells,
            preimages=preimages,
            edge_events=tuple(edge_events),
            cell_edges={c: tuple(v) for c, v in cell_edges.items()},
        )
        span.set_attribute("arrangement.cells", len(cells))
        span.set_attribute("arrangement.edges", len(edge_events))
        span.set_attribute("arrangement.ply", fa.ply)
        logger.info(
            "Folded arrangement built",
            cells=len(cells),
            edges=len(edge_events),
            ply=fa.ply,
        )
        return fa


def _edge_events(
    cp: CreasePattern,
    lff: LocalFlatFolding,
    inverses: Dict[int, RigidMap],
    m: Point,
    u: Point,
    v: Point,
) -> List[CreaseEvent]:
    paper = lff.paper
    spanning: List[CreaseEvent] = []
    folded: Dict[Tuple[int, int], CreaseEvent] = {}
    ends: List[CreaseEvent] = []
    for f in lff.facets:
        loc = paper.locate(inverses[f].apply(m))
        if loc.kind == LocationKind.FACE:
            if loc.index == f:
                spanning.append(SpanningPair(f))
            continue
        if loc.kind != LocationKind.EDGE:
            continue
        pe = paper.edges[loc.index]
        if f not in (pe.left, pe.right):
            continue
        a, b = paper.vertices[pe.u], paper.vertices[pe.v]
        nx_, ny_ = -(b.y - a.y), b.x - a.x
        if f == pe.right:
            nx_, ny_ = -nx_, -ny_
        side = _side_of(lff.maps[f].apply_vector(nx_, ny_), u, v)
        if lff.edge_kind[loc.index] == EdgeKind.CREASE:
            crease = lff.edge_crease[loc.index]
            assert crease is not None
            other = pe.left if f == pe.right else pe.right
            key = (min(f, other), max(f, other))
            if key in folded:
                continue
            upright, flipped = (f, other) if lff.maps[f].parity > 0 else (other, f)
            folded[key] = FoldedPair(side, upright, flipped, crease, cp.creases[crease].label)
        else:
            ends.append(BoundaryEnd(side, f))
    return spanning + [folded[k] for k in sorted(folded)] + ends


def ply(fa: FoldedArrangement) -> int:
    """Maximum number of layers over all cells."""
    return fa.ply


def cell_adjacency_graph(fa: FoldedArrangement) -> nx.Graph:
    """One node per cell, one edge per pair of cells sharing an arrangement edge."""
    return fa.graph


def fold(cp: CreasePattern) -> FoldedArrangement:
    """Local flat folding plus arrangement in one call."""
    lff = build_local_flat_folding(cp)
    return fold_arrangement(lff.pattern, lff)
