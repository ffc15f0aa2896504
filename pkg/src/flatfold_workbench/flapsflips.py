"""Flaps and flips: hinged squares on a table and their flat states.

Side 0 places a flap's square to the left of its hinge direction ``a -> b``.
A state fixes every side bit and, for every pair of squares overlapping in
positive area, which of the two is above. A state is valid when no flap lies
below another whose hinge it touches, and the flaps over any common point are
totally ordered.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import structlog
from opentelemetry import trace

from .config import get_settings
from .errors import BudgetExceeded, InvalidFlapInstance
from .geometry import (
    Point,
    Segment,
    as_rat,
    convex_polygon_intersection,
    polygon_area,
    segment_intersection,
    segment_meets_convex,
)
from .metrics import FLAP_STATES, track_engine_metrics
from .search import BFSFramework

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

Square = Tuple[Point, Point, Point, Point]


@dataclass(frozen=True)
class Hinge:
    a: Point
    b: Point

    def square(self, side: int) -> Square:
        dx, dy = self.b.x - self.a.x, self.b.y - self.a.y
        nx_, ny_ = (-dy, dx) if side == 0 else (dy, -dx)
        offset = Point(nx_, ny_)
        return (self.a, self.b, self.b + offset, self.a + offset)


@dataclass(frozen=True)
class FlapInstance:
    side: Fraction
    flaps: Tuple[Hinge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "side", as_rat(self.side))
        object.__setattr__(self, "flaps", tuple(self.flaps))

    def __len__(self) -> int:
        return len(self.flaps)


@dataclass(frozen=True)
class FlapState:
    """Side bits plus ``(i, j, i_above_j)`` for every overlapping pair ``i < j``."""

    sides: Tuple[int, ...]
    orders: Tuple[Tuple[int, int, bool], ...]

    def above(self, i: int, j: int) -> Optional[bool]:
        for a, b, bit in self.orders:
            if (a, b) == (i, j):
                return bit
            if (a, b) == (j, i):
                return not bit
        return None

    @property
    def pattern(self) -> str:
        return "".join(str(s) for s in self.sides)


def validate_instance(inst: FlapInstance) -> FlapInstance:
    """Hinges must have the common side length and may only share endpoints."""
    if inst.side <= 0:
        msg = f"Flap side must be positive, got {inst.side}"
        raise InvalidFlapInstance(msg)
    segments = []
    for i, h in enumerate(inst.flaps):
        dx, dy = h.b.x - h.a.x, h.b.y - h.a.y
        if dx * dx + dy * dy != inst.side * inst.side:
            msg = f"Hinge {i} does not have length {inst.side}"
            raise InvalidFlapInstance(msg)
        segments.append(Segment(h.a, h.b))
    for i, j in combinations(range(len(segments)), 2):
        hit = segment_intersection(segments[i], segments[j])
        if hit is None:
            continue
        shared = {segments[i].a, segments[i].b} & {segments[j].a, segments[j].b}
        if isinstance(hit, Segment) or hit not in shared:
            msg = f"Hinges {i} and {j} cross"
            raise InvalidFlapInstance(msg)
    return inst


class FlapGeometry:
    """Memoized overlap and hinge-contact tests for one instance."""

    def __init__(self, inst: FlapInstance):
        self.inst = inst
        self.squares = [(h.square(0), h.square(1)) for h in inst.flaps]
        self._overlap: Dict[Tuple[int, int, int, int], bool] = {}
        self._covers: Dict[Tuple[int, int, int], bool] = {}
        self._triple: Dict[Tuple[int, int, int, int, int, int], bool] = {}

    def overlap(self, i: int, si: int, j: int, sj: int) -> bool:
        key = (i, si, j, sj) if i < j else (j, sj, i, si)
        if key not in self._overlap:
            region = convex_polygon_intersection(self.squares[i][si], self.squares[j][sj])
            self._overlap[key] = len(region) >= 3 and polygon_area(region) > 0
        return self._overlap[key]

    def covers(self, i: int, si: int, j: int) -> bool:
        """Whether flap ``i`` placed on side ``si`` touches the open hinge of flap ``j``."""
        key = (i, si, j)
        if key not in self._covers:
            h = self.inst.flaps[j]
            self._covers[key] = segment_meets_convex(self.squares[i][si], h.a, h.b)
        return self._covers[key]

    def options(self, i: int, si: int, j: int, sj: int) -> Optional[List[bool]]:
        """Allowed values of "i above j", or ``None`` when the squares do not overlap."""
        if not self.overlap(i, si, j, sj):
            return None
        allowed = []
        if not self.covers(j, sj, i):
            allowed.append(True)
        if not self.covers(i, si, j):
            allowed.append(False)
        return allowed

    def triple(self, placed: Sequence[Tuple[int, int]]) -> bool:
        (i, si), (j, sj), (k, sk) = placed
        key = (i, si, j, sj, k, sk)
        if key not in self._triple:
            region = convex_polygon_intersection(self.squares[i][si], self.squares[j][sj])
            if len(region) >= 3:
                region = convex_polygon_intersection(region, self.squares[k][sk])
            self._triple[key] = len(region) >= 3 and polygon_area(region) > 0
        return self._triple[key]


def _overlap_triangles(pairs: Sequence[Tuple[int, int]]) -> List[Tuple[int, int, int]]:
    """Triples ``i < j < k`` whose three pairs all appear in ``pairs``."""
    higher: Dict[int, set] = {}
    for i, j in pairs:
        higher.setdefault(i, set()).add(j)
    out = []
    for i, j in pairs:
        for k in sorted(higher.get(i, set()) & higher.get(j, set())):
            out.append((i, j, k))
    return out


def _cyclic(ab: bool, bc: bool, ac: bool) -> bool:
    return (ab and bc and not ac) or (not ab and not bc and ac)


def validate_state(inst: FlapInstance, st: FlapState) -> bool:
    """Hinge rule on every overlapping pair plus acyclicity wherever three flaps overlap."""
    n = len(inst.flaps)
    if len(st.sides) != n or any(s not in (0, 1) for s in st.sides):
        msg = "State side bits do not match the instance"
        raise InvalidFlapInstance(msg)
    geo = FlapGeometry(inst)
    expected = {
        (i, j) for i, j in combinations(range(n), 2) if geo.overlap(i, st.sides[i], j, st.sides[j])
    }
    given = {(i, j) for i, j, _ in st.orders}
    if given != expected or len(st.orders) != len(expected):
        msg = "State order bits do not cover exactly the overlapping pairs"
        raise InvalidFlapInstance(msg)

    bits = {(i, j): bit for i, j, bit in st.orders}
    for (i, j), bit in bits.items():
        opts = geo.options(i, st.sides[i], j, st.sides[j])
        if opts is None or bit not in opts:
            return False
    for i, j, k in _overlap_triangles(sorted(bits)):
        placed = ((i, st.sides[i]), (j, st.sides[j]), (k, st.sides[k]))
        if geo.triple(placed) and _cyclic(bits[(i, j)], bits[(j, k)], bits[(i, k)]):
            return False
    return True


@track_engine_metrics("flap_enumeration")
def enumerate_states(inst: FlapInstance, max_states: Optional[int] = None) -> List[FlapState]:
    """All valid states, side bits in lexicographic order then order bits."""
    settings = get_settings()
    budget = max_states or settings.FLAP_MAX_STATES
    n = len(inst.flaps)
    if n > settings.FLAP_MAX:
        msg = f"Instance has {n} flaps, the limit is {settings.FLAP_MAX}"
        raise BudgetExceeded(msg)
    validate_instance(inst)
    geo = FlapGeometry(inst)
    states: List[FlapState] = []

    def finish(sides: List[int]) -> None:
        pairs: List[Tuple[int, int]] = []
        opts: List[List[bool]] = []
        for i, j in combinations(range(n), 2):
            o = geo.options(i, sides[i], j, sides[j])
            if o is not None:
                pairs.append((i, j))
                opts.append(o)
        index = {p: k for k, p in enumerate(pairs)}
        closing: Dict[int, List[Tuple[int, int, int]]] = {}
        for i, j, k in _overlap_triangles(pairs):
            if geo.triple(((i, sides[i]), (j, sides[j]), (k, sides[k]))):
                last = max(index[(i, j)], index[(j, k)], index[(i, k)])
                closing.setdefault(last, []).append((index[(i, j)], index[(j, k)], index[(i, k)]))
        bits: List[bool] = [False] * len(pairs)

        def assign(m: int) -> None:
            if m == len(pairs):
                if len(states) >= budget:
                    msg = f"Flap state space exceeds the budget of {budget}"
                    raise BudgetExceeded(msg)
                orders = tuple((i, j, bits[k]) for k, (i, j) in enumerate(pairs))
                states.append(FlapState(tuple(sides), orders))
                return
            for bit in opts[m]:
                bits[m] = bit
                if any(_cyclic(bits[a], bits[b], bits[c]) for a, b, c in closing.get(m, [])):
                    continue
                assign(m + 1)

        assign(0)

    def place(k: int, sides: List[int]) -> None:
        if k == n:
            finish(sides)
            return
        for s in (0, 1):
            if all(geo.options(j, sides[j], k, s) != [] for j in range(k)):
                place(k + 1, sides + [s])

    with tracer.start_as_current_span("enumerate_states") as span:
        place(0, [])
        span.set_attribute("flaps.count", n)
        span.set_attribute("flaps.states", len(states))
        FLAP_STATES.inc(len(states))
        logger.info("Flap states enumerated", flaps=n, states=len(states))
    return states


def count_states(inst: FlapInstance, max_states: Optional[int] = None) -> int:
    return len(enumerate_states(inst, max_states))


def states_with_sides(inst: FlapInstance, sides: Sequence[int]) -> List[FlapState]:
    """Valid states with the given side bits."""
    want = tuple(sides)
    return [st for st in state_space(inst).states if st.sides == want]


class StateSpace:
    """The flip graph over all valid states of one instance."""

    def __init__(self, inst: FlapInstance, states: List[FlapState]):
        self.inst = inst
        self.states = states
        self.index = {st: k for k, st in enumerate(states)}
        self._groups: List[Dict[tuple, List[int]]] = []
        for f in range(len(inst.flaps)):
            groups: Dict[tuple, List[int]] = {}
            for k, st in enumerate(states):
                groups.setdefault(self._signature(st, f), []).append(k)
            self._groups.append(groups)
        self.bfs: BFSFramework[FlapState] = BFSFramework(self.moves)

    @staticmethod
    def _signature(st: FlapState, f: int) -> tuple:
        sides = st.sides[:f] + (-1,) + st.sides[f + 1 :]
        kept = tuple(o for o in st.orders if f not in (o[0], o[1]))
        return sides, kept

    def moves(self, st: FlapState) -> List[FlapState]:
        seen = set()
        out = []
        for f, groups in enumerate(self._groups):
            for k in groups.get(self._signature(st, f), []):
                other = self.states[k]
                if other != st and k not in seen:
                    seen.add(k)
                    out.append(other)
        return out


@lru_cache(maxsize=16)
def state_space(inst: FlapInstance) -> StateSpace:
    return StateSpace(inst, enumerate_states(inst))


def moves(inst: FlapInstance, st: FlapState) -> List[FlapState]:
    """Valid states that change one flap's side and/or that flap's order bits."""
    return state_space(inst).moves(st)


def shortest_path(inst: FlapInstance, s: FlapState, t: FlapState) -> Optional[List[FlapState]]:
    return state_space(inst).bfs.search(s, lambda x: x == t)


def reachable(inst: FlapInstance, s: FlapState, t: FlapState) -> bool:
    return shortest_path(inst, s, t) is not None


def components(inst: FlapInstance) -> List[List[FlapState]]:
    space = state_space(inst)
    return space.bfs.components(space.states)


def globally_connected(inst: FlapInstance) -> bool:
    return len(components(inst)) <= 1
