"""Brute-force layering enumeration, the ground truth for the layer DP."""

from itertools import product
from math import factorial, prod
from typing import Dict, Iterator, Optional, Tuple

import structlog
from opentelemetry import trace

from .config import get_settings
from .errors import BudgetExceeded
from .foldcore import FoldedArrangement
from .layerdp import Layering, cell_layerings, check_edge
from .metrics import ORACLE_LAYERINGS, track_engine_metrics

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)


def layering_space(fa: FoldedArrangement) -> int:
    """Number of global layerings: the product of per-cell factorials."""
    return prod(factorial(len(fa.preimages[c])) for c in fa.cells)


def oracle_check(
    fa: FoldedArrangement, layering: Dict[int, Layering], labeled: bool = True
) -> bool:
    """Whether a global layering passes every edge condition at every arrangement edge."""
    for c in fa.cells:
        if sorted(layering.get(c, ())) != sorted(fa.preimages[c]):
            return False
    return all(
        check_edge(ee.events, layering[ee.cell_a], layering[ee.cell_b], labeled)
        for ee in fa.edge_events
    )


def _enumerate(
    fa: FoldedArrangement, max_states: Optional[int]
) -> Iterator[Dict[int, Layering]]:
    budget = max_states or get_settings().ORACLE_MAX_STATES
    space = layering_space(fa)
    if space > budget:
        msg = f"Oracle would enumerate {space} layerings, budget is {budget}"
        raise BudgetExceeded(msg)
    per_cell = cell_layerings(fa)
    cells = sorted(fa.cells)
    for combo in product(*(per_cell[c] for c in cells)):
        ORACLE_LAYERINGS.inc()
        yield dict(zip(cells, combo))


def oracle_first(
    fa: FoldedArrangement, labeled: bool = True, max_states: Optional[int] = None
) -> Optional[Dict[int, Layering]]:
    """First valid layering in enumeration order, or ``None``."""
    for layering in _enumerate(fa, max_states):
        if oracle_check(fa, layering, labeled):
            return layering
    return None


@track_engine_metrics("oracle_decide")
def oracle_decide(
    fa: FoldedArrangement, labeled: bool = True, max_states: Optional[int] = None
) -> bool:
    return oracle_first(fa, labeled, max_states) is not None


@track_engine_metrics("oracle_count")
def oracle_count(
    fa: FoldedArrangement, labeled: bool = True, max_states: Optional[int] = None
) -> int:
    """Count valid global layerings by exhaustive enumeration."""
    with tracer.start_as_current_span("oracle_count") as span:
        count = sum(1 for lay in _enumerate(fa, max_states) if oracle_check(fa, lay, labeled))
        span.set_attribute("oracle.count", count)
        logger.info("Oracle finished", count=count, space=layering_space(fa))
        return count


def oracle_summary(
    fa: FoldedArrangement, labeled: bool = True, max_states: Optional[int] = None
) -> Tuple[bool, int, Optional[Dict[int, Layering]]]:
    """Decision, count and first witness in one pass."""
    count = 0
    first: Optional[Dict[int, Layering]] = None
    for layering in _enumerate(fa, max_states):
        if oracle_check(fa, layering, labeled):
            count += 1
            if first is None:
                first = layering
    return count > 0, count, first
