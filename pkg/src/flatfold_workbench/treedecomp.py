"""Tree decompositions of cell adjacency graphs.

Decompositions come from elimination orderings: min-fill for large graphs and
an exact branch and bound for small ones. ``make_nice`` converts any valid
decomposition into Leaf/Introduce/Forget/Join form with an empty root bag.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx
import structlog

from .config import get_settings
from .errors import InvalidInput

logger = structlog.get_logger(__name__)


class NodeKind(str, Enum):
    """Node tag; ``BAG`` marks nodes of a decomposition that is not nice."""

    BAG = "bag"
    LEAF = "leaf"
    INTRODUCE = "introduce"
    FORGET = "forget"
    JOIN = "join"


@dataclass
class TDNode:
    id: int
    bag: FrozenSet[int]
    children: List[int] = field(default_factory=list)
    kind: NodeKind = NodeKind.BAG
    vertex: Optional[int] = None


@dataclass
class TreeDecomposition:
    """Rooted tree of bags. ``nice`` is set once every node carries a nice tag."""

    nodes: List[TDNode]
    root: int
    nice: bool = False

    @property
    def width(self) -> int:
        return max((len(n.bag) for n in self.nodes), default=0) - 1

    def postorder(self) -> List[int]:
        order: List[int] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            order.append(node)
            stack.extend(self.nodes[node].children)
        order.reverse()
        return order

    def levels(self) -> List[List[int]]:
        """Node ids grouped by height above the leaves; each level depends only on lower ones."""
        height: Dict[int, int] = {}
        for node in self.postorder():
            kids = self.nodes[node].children
            height[node] = 1 + max((height[c] for c in kids), default=-1)
        grouped: Dict[int, List[int]] = {}
        for node, h in height.items():
            grouped.setdefault(h, []).append(node)
        return [sorted(grouped[h]) for h in sorted(grouped)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "root": self.root,
            "width": self.width,
            "nice": self.nice,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "vertex": n.vertex,
                    "bag": sorted(n.bag),
                    "children": list(n.children),
                }
                for n in self.nodes
            ],
        }


def _simple(graph: nx.Graph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(graph.nodes)
    g.add_edges_from((u, v) for u, v in graph.edges if u != v)
    return g


def _fill_in(graph: nx.Graph, nodes: Iterable[int]) -> int:
    nodes = list(nodes)
    count = 0
    for i, v1 in enumerate(nodes):
        for v2 in nodes[i + 1 :]:
            if v2 not in graph[v1]:
                count += 1
    return count


def _is_clique(graph: nx.Graph, nodes: Iterable[int]) -> bool:
    return _fill_in(graph, nodes) == 0


def eliminate_node(graph: nx.Graph, v: int) -> None:
    """Turn the neighbours of ``v`` into a clique and remove ``v``."""
    nbrs = list(graph[v])
    for i, a in enumerate(nbrs):
        for b in nbrs[i + 1 :]:
            graph.add_edge(a, b)
    graph.remove_node(v)


def min_fill_ordering(graph: nx.Graph) -> Tuple[int, List[int]]:
    """Min-fill elimination ordering, ties to the lowest vertex id; returns (width, order)."""
    graph = graph.copy()
    width = 0
    order: List[int] = []
    while len(graph) > 0:
        _, u = min((_fill_in(graph, graph[u]), u) for u in graph)
        width = max(width, len(graph[u]))
        eliminate_node(graph, u)
        order.append(u)
    return width, order


def minor_min_width(graph: nx.Graph) -> int:
    """Treewidth lower bound by repeated contraction of a minimum-degree vertex."""
    graph = graph.copy()
    bound = 0
    while len(graph) > 0:
        d, u = min((len(graph[u]), u) for u in graph)
        bound = max(bound, d)
        nbrs = set(graph[u])
        if nbrs:
            _, v = min((len(set(graph[w]) & nbrs), w) for w in nbrs)
            graph = nx.contracted_nodes(graph, v, u, self_loops=False)
        else:
            graph.remove_node(u)
    return bound


def exact_ordering(graph: nx.Graph) -> Tuple[int, List[int]]:
    """Minimum-width elimination ordering by branch and bound."""
    best_width, best_order = min_fill_ordering(graph)
    lower = minor_min_width(graph)
    if lower >= best_width:
        return best_width, best_order

    best: Dict[str, Any] = {"width": best_width, "order": best_order}
    seen: Dict[FrozenSet[int], int] = {}

    def branch(h: nx.Graph, order: List[int], reached: int) -> None:
        if len(h) < 2:
            if reached < best["width"]:
                best["width"], best["order"] = reached, order + sorted(h)
            return
        key = frozenset(h)
        if seen.get(key, best["width"] + 1) <= reached:
            return
        seen[key] = reached

        candidates = sorted(h)
        for v in candidates:
            if _is_clique(h, h[v]):
                candidates = [v]
                break
        for v in candidates:
            h1 = h.copy()
            eliminate_node(h1, v)
            reached1 = max(reached, len(h[v]))
            if max(reached1, minor_min_width(h1)) < best["width"]:
                branch(h1, order + [v], reached1)

    branch(graph.copy(), [], 0)
    return best["width"], best["order"]


def from_ordering(graph: nx.Graph, order: List[int]) -> Tuple[List[TDNode], int]:
    """Bags of an elimination ordering on one connected graph; returns (nodes, root index)."""
    h = graph.copy()
    position = {v: i for i, v in enumerate(order)}
    nodes: List[TDNode] = []
    later_nbrs: Dict[int, Set[int]] = {}
    for i, v in enumerate(order):
        later_nbrs[v] = set(h[v])
        nodes.append(TDNode(i, frozenset({v} | later_nbrs[v])))
        eliminate_node(h, v)
    root = len(order) - 1
    for i, v in enumerate(order):
        if later_nbrs[v]:
            parent = min(position[w] for w in later_nbrs[v])
            nodes[parent].children.append(i)
        elif i != root:
            nodes[root].children.append(i)
    return _compress(nodes, root)


def _compress(nodes: List[TDNode], root: int) -> Tuple[List[TDNode], int]:
    """Contract tree edges whose one bag contains the other, then renumber from the root."""
    bags = {n.id: n.bag for n in nodes}
    children = {n.id: list(n.children) for n in nodes}
    merged = True
    while merged:
        merged = False
        for p in sorted(children):
            for c in children[p]:
                if bags[c] <= bags[p] or bags[p] <= bags[c]:
                    bags[p] = bags[p] | bags[c]
                    children[p] = [x for x in children[p] if x != c] + children.pop(c)
                    del bags[c]
                    merged = True
                    break
            if merged:
                break

    renumber: Dict[int, int] = {}
    stack = [root]
    while stack:
        x = stack.pop()
        renumber[x] = len(renumber)
        stack.extend(reversed(children[x]))
    out = [
        TDNode(new, bags[old], [renumber[c] for c in children[old]])
        for old, new in sorted(renumber.items(), key=lambda item: item[1])
    ]
    return out, 0


def decompose(graph: nx.Graph, exact_limit: Optional[int] = None) -> TreeDecomposition:
    """Tree decomposition of ``graph``, exact when a component is small enough."""
    if exact_limit is None:
        exact_limit = get_settings().EXACT_TREEWIDTH_LIMIT
    g = _simple(graph)
    if len(g) == 0:
        msg = "Cannot decompose an empty graph"
        raise InvalidInput(msg)

    nodes: List[TDNode] = []
    roots: List[int] = []
    for comp in sorted(nx.connected_components(g), key=min):
        sub = g.subgraph(comp).copy()
        if len(sub) <= exact_limit:
            _, order = exact_ordering(sub)
        else:
            _, order = min_fill_ordering(sub)
        part, root = from_ordering(sub, order)
        offset = len(nodes)
        for node in part:
            node.id += offset
            node.children = [c + offset for c in node.children]
        nodes.extend(part)
        roots.append(root + offset)

    for child, parent in zip(roots, roots[1:]):
        nodes[parent].children.append(child)
    td = TreeDecomposition(nodes=nodes, root=roots[-1])
    logger.debug("Tree decomposition built", bags=len(nodes), width=td.width)
    return td


def make_nice(td: TreeDecomposition) -> TreeDecomposition:
    """Convert to a nice decomposition of the same width with an empty root bag."""
    out: List[TDNode] = []

    def add(
        bag: Set[int], kind: NodeKind, children: List[int], vertex: Optional[int] = None
    ) -> int:
        out.append(TDNode(len(out), frozenset(bag), children, kind, vertex))
        return len(out) - 1

    def morph(top: int, source: FrozenSet[int], target: FrozenSet[int]) -> int:
        bag = set(source)
        for v in sorted(source - target):
            bag.discard(v)
            top = add(bag, NodeKind.FORGET, [top], v)
        for v in sorted(target - source):
            bag.add(v)
            top = add(bag, NodeKind.INTRODUCE, [top], v)
        return top

    tops: Dict[int, int] = {}
    for x in td.postorder():
        node = td.nodes[x]
        if not node.children:
            first = min(node.bag)
            tops[x] = morph(add({first}, NodeKind.LEAF, [], first), frozenset({first}), node.bag)
            continue
        branches = [morph(tops[c], td.nodes[c].bag, node.bag) for c in node.children]
        top = branches[0]
        for other in branches[1:]:
            top = add(set(node.bag), NodeKind.JOIN, [top, other])
        tops[x] = top

    root = morph(tops[td.root], td.nodes[td.root].bag, frozenset())
    nice = TreeDecomposition(nodes=out, root=root, nice=True)
    logger.debug("Nice decomposition built", nodes=len(out), width=nice.width)
    return nice


def _nice_tags_ok(td: TreeDecomposition) -> bool:
    for node in td.nodes:
        kids = [td.nodes[c].bag for c in node.children]
        if node.kind == NodeKind.LEAF:
            ok = not kids and len(node.bag) == 1
        elif node.kind == NodeKind.INTRODUCE:
            ok = (
                len(kids) == 1
                and node.vertex is not None
                and node.vertex not in kids[0]
                and node.bag == kids[0] | {node.vertex}
            )
        elif node.kind == NodeKind.FORGET:
            ok = (
                len(kids) == 1
                and node.vertex is not None
                and node.vertex in kids[0]
                and node.bag == kids[0] - {node.vertex}
            )
        elif node.kind == NodeKind.JOIN:
            ok = len(kids) == 2 and kids[0] == node.bag and kids[1] == node.bag
        else:
            ok = False
        if not ok:
            return False
    return not td.nodes[td.root].bag


def validate(td: TreeDecomposition, graph: nx.Graph) -> bool:
    """Check the tree shape, the three decomposition axioms, and nice tags when flagged."""
    if not td.nodes or not 0 <= td.root < len(td.nodes):
        return False
    parent: Dict[int, Optional[int]] = {td.root: None}
    stack = [td.root]
    while stack:
        x = stack.pop()
        for c in td.nodes[x].children:
            if c in parent or not 0 <= c < len(td.nodes):
                return False
            parent[c] = x
            stack.append(c)
    if len(parent) != len(td.nodes):
        return False

    vertices = set(graph.nodes)
    covered: Set[int] = set().union(*(n.bag for n in td.nodes))
    if covered != vertices:
        return False
    for u, v in graph.edges:
        if u != v and not any(u in n.bag and v in n.bag for n in td.nodes):
            return False
    for v in vertices:
        tops = 0
        for x, p in parent.items():
            if v in td.nodes[x].bag and (p is None or v not in td.nodes[p].bag):
                tops += 1
        if tops != 1:
            return False
    return _nice_tags_ok(td) if td.nice else True
