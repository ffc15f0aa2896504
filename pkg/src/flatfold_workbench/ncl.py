"""Nondeterministic constraint logic.

Edges are red (weight 1) or blue (weight 2); an orientation satisfies the
graph when every vertex receives weight at least 2. Orientation bit 0 directs
an edge ``u -> v``, bit 1 directs it ``v -> u``.

Terminals are loose edge ends used to cut fragments out of a larger graph.
They carry no constraint and may have any degree.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from opentelemetry import trace

from .config import get_settings
from .errors import BudgetExceeded, InputNotCubicBipartite, InvalidNclGraph
from .metrics import NCL_ORIENTATIONS, track_engine_metrics
from .search import BFSFramework

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

Orientation = Tuple[int, ...]


class Color(str, Enum):
    RED = "red"
    BLUE = "blue"

    @property
    def weight(self) -> int:
        return 2 if self is Color.BLUE else 1


@dataclass(frozen=True)
class NclEdge:
    u: int
    v: int
    color: Color

    def head(self, bit: int) -> int:
        return self.v if bit == 0 else self.u


@dataclass(frozen=True)
class NclGraph:
    vertices: Tuple[int, ...]
    edges: Tuple[NclEdge, ...]
    terminals: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "terminals", frozenset(self.terminals))

    @property
    def constrained(self) -> Tuple[int, ...]:
        return tuple(v for v in self.vertices if v not in self.terminals)

    def kind(self, v: int) -> str:
        """``"and"`` for one blue edge, ``"or"`` for three, ``"terminal"`` otherwise."""
        if v in self.terminals:
            return "terminal"
        blue = sum(1 for k in self.incident()[v] if self.edges[k].color is Color.BLUE)
        return "or" if blue == 3 else "and"

    def incident(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {v: [] for v in self.vertices}
        for k, e in enumerate(self.edges):
            out[e.u].append(k)
            out[e.v].append(k)
        return out

    @property
    def blue_count(self) -> int:
        return sum(1 for e in self.edges if e.color is Color.BLUE)


def validate_graph(g: NclGraph) -> NclGraph:
    """3-regular multigraph with one or three blue edges at every non-terminal vertex."""
    known = set(g.vertices)
    if len(known) != len(g.vertices):
        msg = "Duplicate vertex ids"
        raise InvalidNclGraph(msg)
    if not g.terminals <= known:
        msg = "Terminals must be listed among the vertices"
        raise InvalidNclGraph(msg)
    for k, e in enumerate(g.edges):
        if e.u == e.v or e.u not in known or e.v not in known:
            msg = f"Edge {k} is a loop or names an unknown vertex"
            raise InvalidNclGraph(msg)
    for v, edges in g.incident().items():
        if v in g.terminals:
            if not edges:
                msg = f"Terminal {v} has no edges"
                raise InvalidNclGraph(msg)
            continue
        if len(edges) != 3:
            msg = f"Vertex {v} has degree {len(edges)}, expected 3"
            raise InvalidNclGraph(msg)
        blue = sum(1 for k in edges if g.edges[k].color is Color.BLUE)
        if blue not in (1, 3):
            msg = f"Vertex {v} has {blue} blue edges, expected 1 or 3"
            raise InvalidNclGraph(msg)
    return g


def in_weights(g: NclGraph, o: Orientation) -> Dict[int, int]:
    weight = {v: 0 for v in g.vertices}
    for e, bit in zip(g.edges, o):
        weight[e.head(bit)] += e.color.weight
    return weight


def validate(g: NclGraph, o: Orientation) -> bool:
    """Whether every vertex receives weight at least 2."""
    if len(o) != len(g.edges) or any(b not in (0, 1) for b in o):
        msg = "Orientation length does not match the edge count"
        raise InvalidNclGraph(msg)
    weight = in_weights(g, o)
    return all(weight[v] >= 2 for v in g.constrained)


def moves(g: NclGraph, o: Orientation) -> List[Orientation]:
    """Satisfying orientations obtained by reversing one edge."""
    weight = in_weights(g, o)
    out = []
    for k, e in enumerate(g.edges):
        head = e.head(o[k])
        if head in g.terminals or weight[head] - e.color.weight >= 2:
            out.append(o[:k] + (1 - o[k],) + o[k + 1 :])
    return out


def _check_size(g: NclGraph) -> None:
    limit = get_settings().NCL_MAX_EDGES
    if len(g.edges) > limit:
        msg = f"Graph has {len(g.edges)} edges, the exhaustive limit is {limit}"
        raise BudgetExceeded(msg)


def satisfying_orientations(g: NclGraph) -> Iterator[Orientation]:
    """Every satisfying orientation in lexicographic bit order.

    Backtracking over edges in order; a vertex is rejected as soon as its
    remaining edges cannot lift it to weight 2.
    """
    validate_graph(g)
    _check_size(g)
    m = len(g.edges)
    need = {v: 0 if v in g.terminals else 2 for v in g.vertices}
    remaining = {v: 0 for v in g.vertices}
    for e in g.edges:
        remaining[e.u] += e.color.weight
        remaining[e.v] += e.color.weight
    weight = {v: 0 for v in g.vertices}
    bits: List[int] = [0] * m

    def assign(k: int) -> Iterator[Orientation]:
        if k == m:
            yield tuple(bits)
            return
        e = g.edges[k]
        w = e.color.weight
        remaining[e.u] -= w
        remaining[e.v] -= w
        for bit in (0, 1):
            NCL_ORIENTATIONS.inc()
            head, tail = e.head(bit), e.head(1 - bit)
            weight[head] += w
            fits = _feasible(weight, remaining, need, tail)
            if fits and _feasible(weight, remaining, need, head):
                bits[k] = bit
                yield from assign(k + 1)
            weight[head] -= w
        remaining[e.u] += w
        remaining[e.v] += w

    yield from assign(0)


def _feasible(
    weight: Dict[int, int], remaining: Dict[int, int], need: Dict[int, int], v: int
) -> bool:
    return weight[v] + remaining[v] >= need[v]


@track_engine_metrics("ncl_count")
def count_orientations(g: NclGraph) -> int:
    """Number of satisfying orientations."""
    with tracer.start_as_current_span("count_orientations") as span:
        count = sum(1 for _ in satisfying_orientations(g))
        span.set_attribute("ncl.edges", len(g.edges))
        span.set_attribute("ncl.count", count)
        logger.info("NCL orientations counted", edges=len(g.edges), count=count)
        return count


def _bfs(g: NclGraph) -> BFSFramework[Orientation]:
    return BFSFramework(lambda o: moves(g, o))


def shortest_path(g: NclGraph, s: Orientation, t: Orientation) -> Optional[List[Orientation]]:
    _check_size(g)
    if not validate(g, s) or not validate(g, t):
        return None
    return _bfs(g).search(s, lambda o: o == t)


def reachable(g: NclGraph, s: Orientation, t: Orientation) -> bool:
    return shortest_path(g, s, t) is not None


def components(g: NclGraph) -> List[List[Orientation]]:
    return _bfs(g).components(satisfying_orientations(g))


def globally_connected(g: NclGraph) -> bool:
    return len(components(g)) <= 1


def reverse_all(o: Orientation) -> Orientation:
    return tuple(1 - b for b in o)


def _biadjacency(b: Sequence[Sequence[int]]) -> np.ndarray:
    matrix = np.asarray(b, dtype=np.int64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        msg = f"Biadjacency matrix must be square and nonempty, got shape {matrix.shape}"
        raise InputNotCubicBipartite(msg)
    if (matrix < 0).any():
        msg = "Biadjacency entries must be nonnegative edge multiplicities"
        raise InputNotCubicBipartite(msg)
    return matrix


def matchings_to_ncl(b: Sequence[Sequence[int]]) -> NclGraph:
    """Replace each left vertex of a 3-regular bipartite multigraph with a red triangle.

    Left vertex ``i`` becomes triangle vertices ``3i, 3i+1, 3i+2``; right vertex
    ``j`` becomes vertex ``3n + j``. Each triangle vertex takes one of the
    original edges as a blue edge.
    """
    matrix = _biadjacency(b)
    n = matrix.shape[0]
    if (matrix.sum(axis=1) != 3).any() or (matrix.sum(axis=0) != 3).any():
        msg = "Bipartite input is not 3-regular"
        raise InputNotCubicBipartite(msg)

    edges: List[NclEdge] = []
    for i in range(n):
        tri = [3 * i, 3 * i + 1, 3 * i + 2]
        edges.extend(
            NclEdge(tri[k], tri[(k + 1) % 3], Color.RED) for k in range(3)
        )
        slot = 0
        for j in range(n):
            for _ in range(int(matrix[i, j])):
                edges.append(NclEdge(tri[slot], 3 * n + j, Color.BLUE))
                slot += 1
    g = NclGraph(vertices=tuple(range(4 * n)), edges=tuple(edges))
    logger.debug("Matchings instance reduced", n=n, vertices=4 * n, edges=len(edges))
    return validate_graph(g)


def count_matchings(b: Sequence[Sequence[int]]) -> int:
    """Permanent of the biadjacency matrix by row expansion over column subsets."""
    matrix = _biadjacency(b)
    n = matrix.shape[0]
    ways: Dict[int, int] = {0: 1}
    for i in range(n):
        nxt: Dict[int, int] = {}
        for mask, count in ways.items():
            for j in np.flatnonzero(matrix[i]):
                bit = 1 << int(j)
                if mask & bit:
                    continue
                nxt[mask | bit] = nxt.get(mask | bit, 0) + count * int(matrix[i, j])
        ways = nxt
    return ways.get((1 << n) - 1, 0)
