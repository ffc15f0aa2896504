"""Flap gadgets for NCL vertices, edges and crossings, compiled onto a routing grid.

Every gadget is a set of hinged squares of side 5 with integer hinge
endpoints. A vertex gadget is a core of three flaps, one per incident edge,
each extended by a short arm that carries the edge out to a *lane*: the strip
``-2 <= y <= 3`` around a grid row or ``-2 <= x <= 3`` around a grid column.
Between gadgets an edge runs along its lane as a chain of lane flaps whose
hinges are 3 to 5 apart.

A flap of an edge chain points *forward* when its square lies toward the end
of the chain. Valid chain states are some backward flaps followed by forward
flaps. All forward means the start core is flipped away from its vertex, so
the edge points into its start; all backward points it into its end.
"""

from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import structlog
from opentelemetry import trace

from .config import get_settings
from .errors import InvalidFlapInstance, InvalidInput, RoutingInvalid
from .flapsflips import FlapGeometry, FlapInstance, FlapState, Hinge, enumerate_states, state_space
from .geometry import Point
from .metrics import track_engine_metrics
from .ncl import Color, NclGraph, Orientation, satisfying_orientations, validate_graph
from .ncl import components as ncl_components

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

FLAP_SIDE = 5
MIN_SPACING = 3
MAX_SPACING = 5
TAIL_SPACING = 4

GridPoint = Tuple[int, int]
RawHinge = Tuple[GridPoint, GridPoint]


class Direction(str, Enum):
    """Compass directions in counterclockwise order."""

    EAST = "E"
    NORTH = "N"
    WEST = "W"
    SOUTH = "S"

    @property
    def vector(self) -> GridPoint:
        return {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}[self.value]

    @property
    def horizontal(self) -> bool:
        return self in (Direction.EAST, Direction.WEST)

    @property
    def sign(self) -> int:
        return sum(self.vector)

    @property
    def opposite(self) -> "Direction":
        return self.rotated(2)

    def rotated(self, quarter_turns: int) -> "Direction":
        order = list(Direction)
        return order[(order.index(self) + quarter_turns) % 4]

    @classmethod
    def step(cls, a: GridPoint, b: GridPoint) -> "Direction":
        delta = (b[0] - a[0], b[1] - a[1])
        for d in cls:
            if d.vector == delta:
                return d
        msg = f"Grid points {a} and {b} are not one unit step apart"
        raise RoutingInvalid(msg)


def quarter_turns(source: Direction, target: Direction) -> int:
    order = list(Direction)
    return (order.index(target) - order.index(source)) % 4


# Rotating about the origin moves the lanes off their [-2, 3] strips; these
# translations put them back.
_LANE_FIX: Tuple[GridPoint, ...] = ((0, 0), (1, 0), (1, 1), (0, 1))


def _rotate(p: GridPoint, q: int) -> GridPoint:
    x, y = p
    for _ in range(q % 4):
        x, y = -y, x
    fx, fy = _LANE_FIX[q % 4]
    return x + fx, y + fy


class GadgetKind(str, Enum):
    EDGE = "edge"
    AND = "and"
    OR = "or"
    CROSSOVER = "crossover"
    TURN = "turn"


class EdgeState(str, Enum):
    INTO_START = "into_start"
    INTO_END = "into_end"
    TWO_TAILS = "two_tails"


@dataclass(frozen=True)
class Port:
    """Where an edge leaves a gadget: the flap chain from the core to the lane."""

    name: str
    direction: Direction
    chain: Tuple[int, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "direction": self.direction.value, "chain": list(self.chain)}


@dataclass(frozen=True)
class GadgetBlueprint:
    kind: GadgetKind
    hinges: Tuple[RawHinge, ...]
    ports: Tuple[Port, ...]
    k: Optional[int] = None

    def instance(self) -> FlapInstance:
        return FlapInstance(
            side=Fraction(FLAP_SIDE),
            flaps=tuple(Hinge(Point(*a), Point(*b)) for a, b in self.hinges),
        )

    def port(self, name: str) -> Port:
        for p in self.ports:
            if p.name == name:
                return p
        msg = f"{self.kind.value} gadget has no port {name!r}"
        raise InvalidInput(msg)

    def rotated(self, quarter_turns: int) -> "GadgetBlueprint":
        q = quarter_turns % 4
        return replace(
            self,
            hinges=tuple((_rotate(a, q), _rotate(b, q)) for a, b in self.hinges),
            ports=tuple(replace(p, direction=p.direction.rotated(q)) for p in self.ports),
        )

    def translated(self, dx: int, dy: int) -> "GadgetBlueprint":
        return replace(
            self,
            hinges=tuple(
                ((a[0] + dx, a[1] + dy), (b[0] + dx, b[1] + dy)) for a, b in self.hinges
            ),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "k": self.k,
            "side": FLAP_SIDE,
            "flaps": [[list(a), list(b)] for a, b in self.hinges],
            "ports": [p.to_dict() for p in self.ports],
        }


W, N, E, S = Direction.WEST, Direction.NORTH, Direction.EAST, Direction.SOUTH

# Blue core on the stem (west), red cores north and south.
_AND_HINGES: Tuple[RawHinge, ...] = (
    ((-3, 2), (-3, -3)),
    ((0, 0), (0, 5)),
    ((0, -6), (0, -1)),
    ((-10, -1), (-6, 2)),
    ((-11, -1), (-7, 2)),
    ((-12, -4), (-12, 1)),
    ((-14, -2), (-14, 3)),
    ((1, 4), (1, 9)),
    ((3, 7), (0, 11)),
    ((3, 9), (-1, 12)),
    ((-2, 14), (3, 14)),
    ((1, -10), (1, -5)),
    ((2, -11), (2, -6)),
    ((0, -13), (4, -10)),
    ((-2, -14), (3, -14)),
)
_AND_PORTS = (
    Port("blue", W, (0, 3, 4, 5, 6)),
    Port("red_a", N, (1, 7, 8, 9, 10)),
    Port("red_b", S, (2, 11, 12, 13, 14)),
)

# The west side is left open.
_OR_HINGES: Tuple[RawHinge, ...] = (
    ((-3, -3), (2, -3)),
    ((2, 1), (2, 6)),
    ((-1, 4), (-5, 1)),
    ((-2, -8), (3, -8)),
    ((7, -2), (7, 3)),
    ((-3, 6), (1, 9)),
    ((-2, 7), (2, 10)),
    ((-1, 12), (4, 12)),
    ((-2, 15), (3, 15)),
)
_OR_PORTS = (
    Port("blue_a", S, (0, 3)),
    Port("blue_b", E, (1, 4)),
    Port("blue_c", N, (2, 5, 6, 7, 8)),
)

# Flaps 0-6 carry the west-east edge, 7-13 the south-north edge.
_CROSSOVER_HINGES: Tuple[RawHinge, ...] = (
    ((-11, -2), (-11, 3)),
    ((-10, -3), (-10, 2)),
    ((-8, -7), (-8, -2)),
    ((-3, -3), (-3, 2)),
    ((1, -2), (4, 2)),
    ((6, -1), (10, 2)),
    ((11, -2), (11, 3)),
    ((-2, -9), (3, -9)),
    ((-3, -8), (2, -8)),
    ((-7, -5), (-2, -5)),
    ((-9, 0), (-4, 0)),
    ((-5, 4), (0, 4)),
    ((1, 6), (-2, 10)),
    ((-2, 10), (3, 10)),
)
_CROSSOVER_PORTS = (
    Port("west", W, (0, 1, 2, 3, 4, 5, 6)),
    Port("east", E, (6, 5, 4, 3, 2, 1, 0)),
    Port("south", S, (7, 8, 9, 10, 11, 12, 13)),
    Port("north", N, (13, 12, 11, 10, 9, 8, 7)),
)

_TURN_HINGES: Tuple[RawHinge, ...] = (
    ((-10, 3), (-10, -2)),
    ((-5, 2), (-5, 7)),
    ((1, 5), (-2, 9)),
    ((-2, 9), (3, 9)),
)
_TURN_PORTS = (Port("west", W, (0, 1, 2, 3)), Port("north", N, (3, 2, 1, 0)))


def lane_hinge(horizontal: bool, line: int, t: int) -> RawHinge:
    """Lane flap at position ``t`` on the lane around grid coordinate ``line``."""
    if horizontal:
        return (t, line + 3), (t, line - 2)
    return (line - 2, t), (line + 3, t)


def make_gadget(kind: Union[GadgetKind, str], k: Optional[int] = None) -> GadgetBlueprint:
    """Blueprint of one gadget in its local frame, the grid point at the origin."""
    try:
        kind = GadgetKind(kind)
    except ValueError as e:
        msg = f"Unknown gadget kind {kind!r}"
        raise InvalidInput(msg) from e
    if kind is GadgetKind.EDGE:
        if k is None or k < 1:
            msg = f"Edge gadgets need k >= 1, got {k}"
            raise InvalidInput(msg)
        hinges = tuple(lane_hinge(True, 0, TAIL_SPACING * i) for i in range(k))
        chain = tuple(range(k))
        ports = (Port("start", W, chain), Port("end", E, chain[::-1]))
        return GadgetBlueprint(kind, hinges, ports, k)
    if k is not None:
        msg = f"k only applies to edge gadgets, not {kind.value}"
        raise InvalidInput(msg)
    tables = {
        GadgetKind.AND: (_AND_HINGES, _AND_PORTS),
        GadgetKind.OR: (_OR_HINGES, _OR_PORTS),
        GadgetKind.CROSSOVER: (_CROSSOVER_HINGES, _CROSSOVER_PORTS),
        GadgetKind.TURN: (_TURN_HINGES, _TURN_PORTS),
    }
    hinges, ports = tables[kind]
    return GadgetBlueprint(kind, hinges, ports)


def vertex_accepts(kind: GadgetKind, pattern: Sequence[bool]) -> bool:
    """NCL truth table over ports in blueprint order; ``True`` means the edge points in."""
    if kind is GadgetKind.AND:
        blue, red_a, red_b = pattern
        return blue or (red_a and red_b)
    if kind is GadgetKind.OR:
        return any(pattern)
    msg = f"{kind.value} is not a vertex gadget"
    raise InvalidInput(msg)


def _toward(geo: FlapGeometry, i: int, j: int) -> int:
    """Side of flap ``i`` whose square touches the hinge of flap ``j``."""
    sides = [s for s in (0, 1) if geo.covers(i, s, j)]
    if len(sides) != 1:
        msg = f"Flaps {i} and {j} are not linked"
        raise InvalidFlapInstance(msg)
    return sides[0]


def forward_sides(
    geo: FlapGeometry, chain: Sequence[int], direction: Optional[Direction] = None
) -> Tuple[int, ...]:
    """Side of each chain flap that points toward the chain's end.

    A one-flap chain has no neighbour to go by, so ``direction`` decides.
    """
    if len(chain) == 1:
        if direction is None:
            msg = "A single-flap chain needs a direction"
            raise InvalidInput(msg)
        h = geo.inst.flaps[chain[0]]
        dx, dy = h.b.x - h.a.x, h.b.y - h.a.y
        vx, vy = direction.vector
        return (0 if -dy * vx + dx * vy > 0 else 1,)
    out = [_toward(geo, a, b) for a, b in zip(chain, chain[1:])]
    out.append(1 - _toward(geo, chain[-1], chain[-2]))
    return tuple(out)


@dataclass(frozen=True)
class PortTable:
    ports: Tuple[str, ...]
    counts: Mapping[Tuple[bool, ...], int]

    def patterns(self) -> FrozenSet[Tuple[bool, ...]]:
        return frozenset(self.counts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ports": list(self.ports),
            "patterns": [
                {"in": list(p), "states": c} for p, c in sorted(self.counts.items())
            ],
        }


def port_table(bp: GadgetBlueprint) -> PortTable:
    """Flat states of a vertex gadget grouped by which ports point in."""
    if bp.kind not in (GadgetKind.AND, GadgetKind.OR):
        msg = f"{bp.kind.value} gadgets have no port truth table"
        raise InvalidInput(msg)
    inst = bp.instance()
    geo = FlapGeometry(inst)
    outward = [forward_sides(geo, p.chain)[0] for p in bp.ports]
    counts: Dict[Tuple[bool, ...], int] = {}
    for st in enumerate_states(inst):
        pattern = tuple(st.sides[p.chain[0]] == side for p, side in zip(bp.ports, outward))
        counts[pattern] = counts.get(pattern, 0) + 1
    return PortTable(tuple(p.name for p in bp.ports), counts)


@dataclass(frozen=True)
class GadgetReport:
    kind: GadgetKind
    states: int
    expected_states: int
    table: Optional[PortTable]
    ok: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "states": self.states,
            "expected_states": self.expected_states,
            "table": self.table.to_dict() if self.table else None,
            "ok": self.ok,
        }


@track_engine_metrics("gadget_verify")
def verify_gadget(bp: GadgetBlueprint) -> GadgetReport:
    """Enumerate the gadget and compare its behaviour with what its kind promises.

    An arm of ``m`` flaps has one state with its port pointing in and ``m``
    with it pointing out, so a vertex pattern occurs once per product of the
    lengths of its outward arms.
    """
    table: Optional[PortTable] = None
    if bp.kind in (GadgetKind.AND, GadgetKind.OR):
        table = port_table(bp)
        states = sum(table.counts.values())
        expected: Dict[Tuple[bool, ...], int] = {}
        for pattern in product((False, True), repeat=len(bp.ports)):
            if vertex_accepts(bp.kind, pattern):
                weight = 1
                for p, inward in zip(bp.ports, pattern):
                    weight *= 1 if inward else len(p.chain)
                expected[pattern] = weight
        ok = dict(table.counts) == expected
        expected_states = sum(expected.values())
    else:
        states = len(enumerate_states(bp.instance()))
        if bp.kind is GadgetKind.CROSSOVER:
            expected_states = (len(bp.port("west").chain) + 1) * (len(bp.port("south").chain) + 1)
        else:
            expected_states = len(bp.ports[0].chain) + 1
        ok = states == expected_states
    logger.info("Gadget verified", kind=bp.kind.value, states=states, ok=ok)
    return GadgetReport(bp.kind, states, expected_states, table, ok)


@dataclass(frozen=True)
class GridRouting:
    """Grid points of the NCL vertices and one grid path per edge, from ``u`` to ``v``."""

    points: Mapping[int, GridPoint]
    paths: Tuple[Tuple[GridPoint, ...], ...]
    crossovers: FrozenSet[GridPoint] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", {v: tuple(p) for v, p in self.points.items()})
        object.__setattr__(self, "paths", tuple(tuple(map(tuple, p)) for p in self.paths))
        object.__setattr__(self, "crossovers", frozenset(map(tuple, self.crossovers)))


def _port_direction(g: NclGraph, routing: GridRouting, k: int, v: int) -> Direction:
    path = routing.paths[k]
    if g.edges[k].u == v:
        return Direction.step(path[0], path[1])
    return Direction.step(path[-1], path[-2])


def validate_routing(g: NclGraph, routing: GridRouting) -> GridRouting:
    """Check that ``routing`` draws ``g`` on the grid the way the compiler needs."""
    missing = set(g.vertices) - set(routing.points)
    if missing:
        msg = f"Vertices without a grid point: {sorted(missing)}"
        raise RoutingInvalid(msg)
    owner: Dict[GridPoint, int] = {}
    for v in g.vertices:
        p = routing.points[v]
        if p in owner:
            msg = f"Vertices {owner[p]} and {v} share grid point {p}"
            raise RoutingInvalid(msg)
        owner[p] = v
    if len(routing.paths) != len(g.edges):
        msg = f"Routing has {len(routing.paths)} paths for {len(g.edges)} edges"
        raise RoutingInvalid(msg)

    passes: Dict[GridPoint, List[Tuple[int, Direction, Direction]]] = {}
    for k, (e, path) in enumerate(zip(g.edges, routing.paths)):
        if len(path) < 2 or path[0] != routing.points[e.u] or path[-1] != routing.points[e.v]:
            msg = f"Path {k} does not run from vertex {e.u} to vertex {e.v}"
            raise RoutingInvalid(msg)
        if len(set(path)) != len(path):
            msg = f"Path {k} revisits a grid point"
            raise RoutingInvalid(msg)
        for j in range(1, len(path) - 1):
            p = path[j]
            if p in owner:
                msg = f"Path {k} runs through vertex {owner[p]}"
                raise RoutingInvalid(msg)
            back = Direction.step(p, path[j - 1])
            ahead = Direction.step(p, path[j + 1])
            passes.setdefault(p, []).append((k, back, ahead))
        Direction.step(path[-2], path[-1])

    for p, users in passes.items():
        if p in routing.crossovers:
            if len(users) != 2:
                msg = f"Crossover {p} is used by {len(users)} paths, expected 2"
                raise RoutingInvalid(msg)
            (_, b1, a1), (_, b2, a2) = users
            if b1 is not a1.opposite or b2 is not a2.opposite or b1.horizontal == b2.horizontal:
                msg = f"Paths at crossover {p} must run straight and perpendicular"
                raise RoutingInvalid(msg)
        elif len(users) > 1:
            msg = f"Paths {[u[0] for u in users]} share grid point {p}"
            raise RoutingInvalid(msg)
    unused = sorted(routing.crossovers - set(passes))
    if unused:
        msg = f"Declared crossovers {unused} are not on any path"
        raise RoutingInvalid(msg)

    for v, edges in g.incident().items():
        if v in g.terminals:
            if len(edges) != 1:
                msg = f"Terminal {v} has degree {len(edges)}; routed terminals need degree 1"
                raise RoutingInvalid(msg)
            continue
        dirs = {k: _port_direction(g, routing, k, v) for k in edges}
        if len(set(dirs.values())) != 3:
            msg = f"Edges leave vertex {v} in the same direction"
            raise RoutingInvalid(msg)
        if g.kind(v) == "and":
            open_side = next(d for d in Direction if d not in dirs.values())
            blue = next(k for k in edges if g.edges[k].color is Color.BLUE)
            if dirs[blue] is not open_side.opposite:
                msg = f"Blue edge of AND vertex {v} must leave opposite its open side"
                raise RoutingInvalid(msg)
    return routing


@dataclass(frozen=True)
class EdgeGadget:
    """One NCL edge in a compiled instance: its flaps from start to end."""

    edge: int
    chain: Tuple[int, ...]
    forward: Tuple[int, ...]

    def flags(self, sides: Sequence[int]) -> Tuple[bool, ...]:
        return tuple(sides[f] == fw for f, fw in zip(self.chain, self.forward))

    def decode(self, sides: Sequence[int]) -> EdgeState:
        flags = self.flags(sides)
        if all(flags):
            return EdgeState.INTO_START
        if not any(flags):
            return EdgeState.INTO_END
        return EdgeState.TWO_TAILS

    def to_dict(self) -> Dict[str, Any]:
        return {"edge": self.edge, "chain": list(self.chain), "forward": list(self.forward)}


@dataclass(frozen=True)
class CompiledInstance:
    instance: FlapInstance
    graph: NclGraph
    edges: Tuple[EdgeGadget, ...]
    pieces: Tuple[Tuple[GadgetKind, GridPoint], ...]

    def decode(self, st: FlapState) -> Tuple[EdgeState, ...]:
        return tuple(gadget.decode(st.sides) for gadget in self.edges)

    def orientation(self, st: FlapState) -> Optional[Orientation]:
        """Orientation of a canonical state; ``None`` while some edge has two tails."""
        bits = []
        for state in self.decode(st):
            if state is EdgeState.TWO_TAILS:
                return None
            bits.append(1 if state is EdgeState.INTO_START else 0)
        return tuple(bits)

    def is_canonical(self, st: FlapState) -> bool:
        return self.orientation(st) is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "side": FLAP_SIDE,
            "flaps": [
                [[int(h.a.x), int(h.a.y)], [int(h.b.x), int(h.b.y)]] for h in self.instance.flaps
            ],
            "edges": [e.to_dict() for e in self.edges],
            "pieces": [{"kind": kind.value, "at": list(at)} for kind, at in self.pieces],
        }


@dataclass
class _Run:
    """Lane flaps between two anchors, or between an anchor and a loose end."""

    direction: Direction
    line: int
    lo: int
    hi: int
    start: int
    gap: Optional[int] = None
    inward: bool = False

    def positions(self, n: int) -> List[int]:
        s = self.direction.sign
        if self.gap is not None:
            d = n + 1
            return [self.start + s * ((2 * self.gap * i + d) // (2 * d)) for i in range(1, n + 1)]
        steps = range(n, 0, -1) if self.inward else range(1, n + 1)
        return [self.start + s * TAIL_SPACING * m for m in steps]


class _Layout:
    def __init__(self, unit: int):
        self.unit = unit
        self.hinges: List[RawHinge] = []
        self.pieces: List[Tuple[GadgetKind, GridPoint]] = []

    def place(self, kind: GadgetKind, at: GridPoint, q: int) -> Dict[Direction, Tuple[int, ...]]:
        bp = make_gadget(kind).rotated(q).translated(at[0] * self.unit, at[1] * self.unit)
        base = len(self.hinges)
        self.hinges.extend(bp.hinges)
        self.pieces.append((kind, at))
        return {p.direction: tuple(base + c for c in p.chain) for p in bp.ports}

    def lane_flap(self, run: _Run, t: int) -> int:
        self.hinges.append(lane_hinge(run.direction.horizontal, run.line, t))
        return len(self.hinges) - 1

    def position(self, flap: int, direction: Direction) -> int:
        a = self.hinges[flap][0]
        return a[0] if direction.horizontal else a[1]

    def line(self, at: GridPoint, direction: Direction) -> int:
        return (at[1] if direction.horizontal else at[0]) * self.unit

    def coordinate(self, at: GridPoint, direction: Direction) -> int:
        return (at[0] if direction.horizontal else at[1]) * self.unit


def _between(layout: _Layout, a_end: int, b_start: int, at: GridPoint, d: Direction) -> _Run:
    gap = abs(layout.position(b_start, d) - layout.position(a_end, d))
    lo = max(0, -(-gap // MAX_SPACING) - 1)
    hi = gap // MIN_SPACING - 1
    if lo > hi:
        msg = f"Gadgets near grid point {at} are too close for a lane run"
        raise RoutingInvalid(msg)
    return _Run(d, layout.line(at, d), lo, hi, layout.position(a_end, d), gap=gap)


def _loose(
    layout: _Layout, flap: int, at: GridPoint, end: GridPoint, d: Direction, inward: bool = False
) -> _Run:
    room = abs(layout.coordinate(end, d) - layout.position(flap, d))
    start = layout.position(flap, d)
    return _Run(d, layout.line(at, d), 0, room // TAIL_SPACING, start, inward=inward)


def _route_edge(
    layout: _Layout,
    g: NclGraph,
    routing: GridRouting,
    k: int,
    red_length: int,
    vertex_ports: Dict[int, Dict[Direction, Tuple[int, ...]]],
    crossings: Dict[GridPoint, Dict[Direction, Tuple[int, ...]]],
) -> Tuple[List[int], Direction]:
    e = g.edges[k]
    path = routing.paths[k]
    first = Direction.step(path[0], path[1])

    # Anchors are the gadget chains the edge passes through, with their path index.
    anchors: List[Tuple[Tuple[int, ...], int]] = []
    if e.u not in g.terminals:
        anchors.append((vertex_ports[e.u][first], 0))
    for j in range(1, len(path) - 1):
        back = Direction.step(path[j], path[j - 1])
        ahead = Direction.step(path[j], path[j + 1])
        if back is ahead.opposite:
            if path[j] in routing.crossovers:
                if path[j] not in crossings:
                    crossings[path[j]] = layout.place(GadgetKind.CROSSOVER, path[j], 0)
                anchors.append((crossings[path[j]][back], j))
            continue
        q = next(q for q in range(4) if {W.rotated(q), N.rotated(q)} == {back, ahead})
        anchors.append((layout.place(GadgetKind.TURN, path[j], q)[back], j))
    if e.v not in g.terminals:
        last = Direction.step(path[-1], path[-2])
        anchors.append((vertex_ports[e.v][last][::-1], len(path) - 1))

    parts: List[Union[Tuple[int, ...], _Run]] = []
    if not anchors:
        # A straight path between two loose ends: start on the first grid point.
        room = (len(path) - 1) * layout.unit
        start = layout.coordinate(path[0], first) - first.sign * TAIL_SPACING
        parts.append(_Run(first, layout.line(path[0], first), 1, room // TAIL_SPACING + 1, start))
    else:
        chain0, at0 = anchors[0]
        if e.u in g.terminals:
            d = Direction.step(path[at0], path[at0 - 1])
            parts.append(_loose(layout, chain0[0], path[at0], path[0], d, inward=True))
        for (chain, at), (nxt, _) in zip(anchors, anchors[1:]):
            parts.append(chain)
            d = Direction.step(path[at], path[at + 1])
            parts.append(_between(layout, chain[-1], nxt[0], path[at], d))
        chain_n, at_n = anchors[-1]
        parts.append(chain_n)
        if e.v in g.terminals:
            d = Direction.step(path[at_n], path[at_n + 1])
            parts.append(_loose(layout, chain_n[-1], path[at_n], path[-1], d))

    runs = [p for p in parts if isinstance(p, _Run)]
    fixed = sum(len(p) for p in parts if not isinstance(p, _Run))
    counts = [r.lo for r in runs]
    if e.color is Color.RED:
        lo, hi = fixed + sum(counts), fixed + sum(r.hi for r in runs)
        if not lo <= red_length <= hi:
            msg = f"Red edge {k} cannot hold exactly {red_length} flaps; its route allows {lo}-{hi}"
            raise RoutingInvalid(msg)
        rest = red_length - lo
        for i, r in enumerate(runs):
            extra = min(rest, r.hi - r.lo)
            counts[i] += extra
            rest -= extra

    chain: List[int] = []
    it = iter(counts)
    for part in parts:
        if isinstance(part, _Run):
            chain.extend(layout.lane_flap(part, t) for t in part.positions(next(it)))
        else:
            chain.extend(part)
    return chain, first


@track_engine_metrics("compile_ncl")
def compile_ncl(g: NclGraph, routing: GridRouting, k: int) -> CompiledInstance:
    """Lay out a flap instance for ``g`` along ``routing``, every red edge with ``k`` flaps.

    Blue edges use as few flaps as their route allows. Terminals get no
    gadget; the edge simply stops there.
    """
    if k < 1:
        msg = f"Red edge length must be at least 1, got {k}"
        raise InvalidInput(msg)
    validate_graph(g)
    validate_routing(g, routing)
    layout = _Layout(get_settings().GRID_UNIT)

    with tracer.start_as_current_span("compile_ncl") as span:
        vertex_ports: Dict[int, Dict[Direction, Tuple[int, ...]]] = {}
        incident = g.incident()
        for v in g.constrained:
            dirs = {_port_direction(g, routing, e, v) for e in incident[v]}
            open_side = next(d for d in Direction if d not in dirs)
            if g.kind(v) == "and":
                kind, q = GadgetKind.AND, quarter_turns(W, open_side.opposite)
            else:
                kind, q = GadgetKind.OR, quarter_turns(W, open_side)
            vertex_ports[v] = layout.place(kind, routing.points[v], q)

        crossings: Dict[GridPoint, Dict[Direction, Tuple[int, ...]]] = {}
        routed = [
            _route_edge(layout, g, routing, e, k, vertex_ports, crossings)
            for e in range(len(g.edges))
        ]
        inst = FlapInstance(
            side=Fraction(FLAP_SIDE),
            flaps=tuple(Hinge(Point(*a), Point(*b)) for a, b in layout.hinges),
        )
        geo = FlapGeometry(inst)
        edges = tuple(
            EdgeGadget(e, tuple(chain), forward_sides(geo, chain, first))
            for e, (chain, first) in enumerate(routed)
        )
        span.set_attribute("gadget.flaps", len(inst))
        span.set_attribute("gadget.pieces", len(layout.pieces))
        logger.info("NCL graph compiled", flaps=len(inst), pieces=len(layout.pieces), k=k)
        return CompiledInstance(inst, g, edges, tuple(layout.pieces))


def canonicalize(compiled: CompiledInstance, st: FlapState) -> Tuple[FlapState, Orientation]:
    """Flip two-tailed edges until each points into its start vertex.

    Flaps are flipped one at a time, from the last backward flap down to the
    start core, so every intermediate state is valid.
    """
    space = state_space(compiled.instance)
    current = st
    for gadget in compiled.edges:
        if gadget.decode(current.sides) is not EdgeState.TWO_TAILS:
            continue
        first_forward = gadget.flags(current.sides).index(True)
        for idx in range(first_forward - 1, -1, -1):
            flap, side = gadget.chain[idx], gadget.forward[idx]
            want = current.sides[:flap] + (side,) + current.sides[flap + 1 :]
            current = next((nb for nb in space.moves(current) if nb.sides == want), current)
            if current.sides != want:
                msg = f"Flap {flap} of edge {gadget.edge} cannot flip forward"
                raise InvalidFlapInstance(msg)
    orientation = compiled.orientation(current)
    if orientation is None:
        msg = "State did not reach a canonical form"
        raise InvalidFlapInstance(msg)
    return current, orientation


def canonical_states(compiled: CompiledInstance) -> List[FlapState]:
    return [st for st in state_space(compiled.instance).states if compiled.is_canonical(st)]


@dataclass(frozen=True)
class CompiledReport:
    """How a compiled instance's flap states line up with its NCL orientations."""

    flaps: int
    states: int
    canonical: int
    orientations: int
    bijective: bool
    connectivity_matches: bool

    @property
    def ok(self) -> bool:
        return self.bijective and self.connectivity_matches

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flaps": self.flaps,
            "states": self.states,
            "canonical": self.canonical,
            "orientations": self.orientations,
            "bijective": self.bijective,
            "connectivity_matches": self.connectivity_matches,
            "ok": self.ok,
        }


@track_engine_metrics("compiled_verify")
def verify_compiled(compiled: CompiledInstance) -> CompiledReport:
    """Check canonical states against satisfying orientations, one to one.

    Also checks that two orientations share a flap-flip component exactly when
    they share an NCL reconfiguration component.
    """
    space = state_space(compiled.instance)
    decoded: Dict[Orientation, int] = {}
    flap_component: Dict[Orientation, int] = {}
    canonical = 0
    for ci, comp in enumerate(space.bfs.components(space.states)):
        for st in comp:
            o = compiled.orientation(st)
            if o is None:
                continue
            canonical += 1
            decoded[o] = decoded.get(o, 0) + 1
            flap_component[o] = ci
    satisfying = set(satisfying_orientations(compiled.graph))
    bijective = set(decoded) == satisfying and all(c == 1 for c in decoded.values())

    connectivity = bijective
    if bijective:
        ncl_of = {o: ci for ci, comp in enumerate(ncl_components(compiled.graph)) for o in comp}
        pairs = {(flap_component[o], ncl_of[o]) for o in satisfying}
        connectivity = len(pairs) == len({p[0] for p in pairs}) == len({p[1] for p in pairs})

    report = CompiledReport(
        flaps=len(compiled.instance),
        states=len(space.states),
        canonical=canonical,
        orientations=len(satisfying),
        bijective=bijective,
        connectivity_matches=connectivity,
    )
    logger.info("Compiled instance verified", **report.to_dict())
    return report
