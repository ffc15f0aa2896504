"""Layer-ordering dynamic program over a nice tree decomposition.

A bag state assigns every cell of the bag one of its layerings (a top-to-bottom
order of the facets covering it). Edge conditions are checked when a cell is
introduced, against every cell already in the bag, so each arrangement edge is
checked exactly where the decomposition first covers it.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from typing import Dict, List, Optional, Sequence, Tuple

import structlog
from opentelemetry import trace

from .config import get_settings
from .errors import DecompositionInvalid, NoWitness, PlyLimitExceeded
from .foldcore import (
    CreaseEvent,
    FoldedArrangement,
    FoldedPair,
    Label,
    SpanningPair,
)
from .metrics import DP_BAG_STATES, DP_WIDTH, track_engine_metrics
from .treedecomp import NodeKind, TreeDecomposition, decompose, make_nice, validate

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

Layering = Tuple[int, ...]
StateKey = Tuple[int, ...]


class Mode(str, Enum):
    DECIDE = "decide"
    COUNT = "count"
    WITNESS = "witness"


def check_edge(
    events: Sequence[CreaseEvent],
    la: Sequence[int],
    lb: Sequence[int],
    labeled: bool = True,
) -> bool:
    """Whether two cell layerings meet consistently along one arrangement edge.

    ``la`` and ``lb`` list facets top to bottom in the edge's side-0 and side-1
    cells. Layers ending at the paper boundary impose nothing.
    """
    pos = ({f: i for i, f in enumerate(la)}, {f: i for i, f in enumerate(lb)})
    spanning = [e.facet for e in events if isinstance(e, SpanningPair)]
    folded = [e for e in events if isinstance(e, FoldedPair)]

    # continuing layers keep their relative order
    ranked = sorted(spanning, key=lambda f: pos[0][f])
    if any(pos[1][f] > pos[1][g] for f, g in zip(ranked, ranked[1:])):
        return False

    spans: List[List[Tuple[int, int]]] = [[], []]
    for pair in folded:
        side = pos[pair.side]
        top, bottom = side[pair.upright], side[pair.flipped]
        if labeled and pair.label is not None:
            if pair.label == Label.M and top > bottom:
                return False
            if pair.label == Label.V and top < bottom:
                return False
        lo, hi = min(top, bottom), max(top, bottom)
        if any(lo < side[f] < hi for f in spanning):
            return False
        spans[pair.side].append((lo, hi))

    for intervals in spans:
        for i, (lo1, hi1) in enumerate(intervals):
            for lo2, hi2 in intervals[i + 1 :]:
                if lo1 < lo2 < hi1 < hi2 or lo2 < lo1 < hi2 < hi1:
                    return False
    return True


def cell_layerings(fa: FoldedArrangement) -> Dict[int, List[Layering]]:
    """All layerings of every cell in lexicographic order; the index is the state rank."""
    return {c: list(permutations(sorted(fa.preimages[c]))) for c in fa.cells}


@dataclass
class DPTable:
    """Per-node state tables of one DP run."""

    fa: FoldedArrangement
    ntd: TreeDecomposition
    mode: Mode
    layerings: Dict[int, List[Layering]]
    tables: Dict[int, Dict[StateKey, int]] = field(default_factory=dict)
    choices: Dict[int, Dict[StateKey, int]] = field(default_factory=dict)

    @property
    def root_count(self) -> int:
        return self.tables[self.ntd.root].get((), 0)


@dataclass(frozen=True)
class DPResult:
    foldable: bool
    count: Optional[int]
    witness: Optional[Dict[int, Layering]]
    width: int
    ply: int
    max_bag_states: int
    table: DPTable = field(repr=False, compare=False)


class _Evaluator:
    """Computes node tables; edge checks are memoized per cell-rank pair."""

    def __init__(self, table: DPTable, labeled: bool):
        self.t = table
        self.labeled = labeled
        self.between: Dict[Tuple[int, int], list] = {}
        for ee in table.fa.edge_events:
            a, b = sorted((ee.cell_a, ee.cell_b))
            self.between.setdefault((a, b), []).append(ee)
        self._memo: Dict[Tuple[int, int, int, int], bool] = {}

    def pair_ok(self, a: int, ra: int, b: int, rb: int) -> bool:
        if a > b:
            a, ra, b, rb = b, rb, a, ra
        key = (a, ra, b, rb)
        if key not in self._memo:
            lay = {a: self.t.layerings[a][ra], b: self.t.layerings[b][rb]}
            self._memo[key] = all(
                check_edge(ee.events, lay[ee.cell_a], lay[ee.cell_b], self.labeled)
                for ee in self.between.get((a, b), [])
            )
        return self._memo[key]

    def evaluate(self, x: int) -> Tuple[Dict[StateKey, int], Dict[StateKey, int]]:
        node = self.t.ntd.nodes[x]
        bag = sorted(node.bag)
        decide = self.t.mode == Mode.DECIDE
        table: Dict[StateKey, int] = {}
        choice: Dict[StateKey, int] = {}

        if node.kind == NodeKind.LEAF:
            v = bag[0]
            for r in range(len(self.t.layerings[v])):
                if self.pair_ok(v, r, v, r):
                    table[(r,)] = 1

        elif node.kind == NodeKind.INTRODUCE:
            v = node.vertex
            assert v is not None
            child = self.t.tables[node.children[0]]
            i = bag.index(v)
            others = [(j if j < i else j - 1, c) for j, c in enumerate(bag) if c != v]
            linked = [(j, c) for j, c in others if (min(c, v), max(c, v)) in self.between]
            valid = [r for r in range(len(self.t.layerings[v])) if self.pair_ok(v, r, v, r)]
            for key, cnt in child.items():
                for r in valid:
                    if all(self.pair_ok(v, r, c, key[j]) for j, c in linked):
                        table[key[:i] + (r,) + key[i:]] = cnt

        elif node.kind == NodeKind.FORGET:
            v = node.vertex
            assert v is not None
            child_node = self.t.ntd.nodes[node.children[0]]
            i = sorted(child_node.bag).index(v)
            for key, cnt in self.t.tables[node.children[0]].items():
                parent = key[:i] + key[i + 1 :]
                if parent not in table:
                    choice[parent] = key[i]
                    table[parent] = 0
                table[parent] = 1 if decide else table[parent] + cnt

        elif node.kind == NodeKind.JOIN:
            left = self.t.tables[node.children[0]]
            right = self.t.tables[node.children[1]]
            for key, cnt in left.items():
                if key in right:
                    table[key] = 1 if decide else cnt * right[key]
        return table, choice


@track_engine_metrics("layer_dp")
def run_dp(
    fa: FoldedArrangement,
    ntd: Optional[TreeDecomposition] = None,
    mode: Mode = Mode.COUNT,
    labeled: bool = True,
    threads: Optional[int] = None,
    max_ply: Optional[int] = None,
) -> DPResult:
    """Decide, count or find a valid layering of a folded arrangement."""
    settings = get_settings()
    threads = threads or settings.THREADS
    max_ply = max_ply or settings.MAX_PLY
    if fa.ply > max_ply:
        msg = f"Ply {fa.ply} exceeds the limit of {max_ply}"
        raise PlyLimitExceeded(msg)

    graph = fa.graph
    if ntd is None:
        ntd = make_nice(decompose(graph))
    if not ntd.nice or not validate(ntd, graph):
        msg = "Tree decomposition is not a valid nice decomposition of the cell graph"
        raise DecompositionInvalid(msg)

    with tracer.start_as_current_span("run_dp") as span:
        table = DPTable(fa=fa, ntd=ntd, mode=mode, layerings=cell_layerings(fa))
        evaluator = _Evaluator(table, labeled)
        max_states = 0
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for level in ntd.levels():
                results = list(pool.map(evaluator.evaluate, level))
                for x, (node_table, choice) in zip(level, results):
                    table.tables[x] = node_table
                    table.choices[x] = choice
                    max_states = max(max_states, len(node_table))
                    DP_BAG_STATES.observe(len(node_table))
        DP_WIDTH.observe(ntd.width)

        count = table.root_count
        foldable = count > 0
        witness = extract_witness(table) if mode == Mode.WITNESS and foldable else None
        result = DPResult(
            foldable=foldable,
            count=None if mode == Mode.DECIDE else count,
            witness=witness,
            width=ntd.width,
            ply=fa.ply,
            max_bag_states=max_states,
            table=table,
        )
        span.set_attribute("dp.foldable", foldable)
        span.set_attribute("dp.width", ntd.width)
        span.set_attribute("dp.max_bag_states", max_states)
        logger.info(
            "DP finished",
            mode=mode.value,
            foldable=foldable,
            count=result.count,
            width=ntd.width,
            ply=fa.ply,
            max_bag_states=max_states,
        )
        return result


def extract_witness(table: DPTable) -> Dict[int, Layering]:
    """Backtrack one global layering from the root of a finished DP."""
    if table.root_count == 0:
        msg = "No valid layering exists"
        raise NoWitness(msg)

    ntd = table.ntd
    ranks: Dict[int, int] = {}
    stack: List[Tuple[int, StateKey]] = [(ntd.root, ())]
    while stack:
        x, key = stack.pop()
        node = ntd.nodes[x]
        bag = sorted(node.bag)
        for c, r in zip(bag, key):
            ranks[c] = r
        if node.kind == NodeKind.LEAF:
            continue
        if node.kind == NodeKind.INTRODUCE:
            i = bag.index(node.vertex)  # type: ignore[arg-type]
            stack.append((node.children[0], key[:i] + key[i + 1 :]))
        elif node.kind == NodeKind.FORGET:
            child_bag = sorted(ntd.nodes[node.children[0]].bag)
            i = child_bag.index(node.vertex)  # type: ignore[arg-type]
            r = table.choices[x][key]
            stack.append((node.children[0], key[:i] + (r,) + key[i:]))
        else:
            stack.extend((c, key) for c in node.children)
    return {c: table.layerings[c][ranks[c]] for c in sorted(ranks)}


def mv_assignment(fa: FoldedArrangement, layering: Dict[int, Layering]) -> List[Optional[Label]]:
    """Read the fold direction of every crease off a valid global layering."""
    labels: List[Optional[Label]] = [None] * len(fa.lff.pattern.creases)
    for ee in fa.edge_events:
        for event in ee.events:
            if not isinstance(event, FoldedPair) or labels[event.crease] is not None:
                continue
            cell = ee.cell_a if event.side == 0 else ee.cell_b
            order = layering[cell]
            above = order.index(event.upright) < order.index(event.flipped)
            labels[event.crease] = Label.M if above else Label.V
    return labels
