"""Breadth-first search over reconfiguration state graphs."""

from collections import deque
from typing import Callable, Dict, Generic, Hashable, Iterable, List, Optional, TypeVar

S = TypeVar("S", bound=Hashable)


class BFSFramework(Generic[S]):
    """Breadth-first search driven by a neighbour function.

    Frontier order follows the order ``get_next_states`` yields, so paths and
    components come out deterministic.
    """

    def __init__(self, get_next_states: Callable[[S], Iterable[S]]):
        self.get_next_states = get_next_states

    def search(self, initial_state: S, is_goal_state: Callable[[S], bool]) -> Optional[List[S]]:
        """Path from ``initial_state`` to the first goal state found, or ``None``."""
        if is_goal_state(initial_state):
            return [initial_state]
        parent: Dict[S, Optional[S]] = {initial_state: None}
        queue = deque([initial_state])
        while queue:
            current = queue.popleft()
            for nxt in self.get_next_states(current):
                if nxt in parent:
                    continue
                parent[nxt] = current
                if is_goal_state(nxt):
                    path = [nxt]
                    back = parent[nxt]
                    while back is not None:
                        path.append(back)
                        back = parent[back]
                    return path[::-1]
                queue.append(nxt)
        return None

    def component(self, initial_state: S) -> List[S]:
        """All states reachable from ``initial_state`` in visiting order."""
        seen = {initial_state}
        order = [initial_state]
        queue = deque([initial_state])
        while queue:
            current = queue.popleft()
            for nxt in self.get_next_states(current):
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(nxt)
                    queue.append(nxt)
        return order

    def components(self, states: Iterable[S]) -> List[List[S]]:
        """Partition ``states`` into connected components, in first-appearance order."""
        seen: set = set()
        out: List[List[S]] = []
        for s in states:
            if s in seen:
                continue
            comp = self.component(s)
            seen.update(comp)
            out.append(comp)
        return out
