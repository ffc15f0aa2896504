"""Instance generators for the command line and the test corpus.

Random generators take a seed and draw from ``numpy.random.default_rng`` so a
seed always reproduces the same instance.
"""

from fractions import Fraction
from functools import cmp_to_key
from math import gcd
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from .errors import InvalidInput
from .foldcore import Crease, CreasePattern, Label
from .geometry import Point, Segment, angle_cmp, segment_intersection

logger = structlog.get_logger(__name__)

LabelLike = Optional[Union[Label, str]]
Direction = Tuple[Fraction, Fraction]

RANDOM_FAN_RETRIES = 1000


def _labels(labels: Optional[Sequence[LabelLike]], count: int) -> List[Optional[Label]]:
    if labels is None:
        return [None] * count
    if len(labels) != count:
        msg = f"Expected {count} labels, got {len(labels)}"
        raise InvalidInput(msg)
    return [Label(label) if label is not None else None for label in labels]


def _rectangle(width: int, height: int) -> Tuple[Point, ...]:
    return (Point(0, 0), Point(width, 0), Point(width, height), Point(0, height))


def strip(n: int, labels: Optional[Sequence[LabelLike]] = None) -> CreasePattern:
    """A 1 x n strip of unit squares with a crease between neighbours."""
    if n < 1:
        msg = f"Strip length must be at least 1, got {n}"
        raise InvalidInput(msg)
    creases = tuple(
        Crease(Point(i, 0), Point(i, 1), label)
        for i, label in zip(range(1, n), _labels(labels, n - 1))
    )
    return CreasePattern(_rectangle(n, 1), creases)


def grid_map(rows: int, cols: int, labels: Optional[Sequence[LabelLike]] = None) -> CreasePattern:
    """A rows x cols map folded along every grid line.

    Creases are unit segments: the vertical ones first, column by column from
    the bottom, then the horizontal ones, row by row from the left.
    """
    if rows < 1 or cols < 1:
        msg = f"Map must have at least one row and column, got {rows}x{cols}"
        raise InvalidInput(msg)
    segments = [(Point(x, y), Point(x, y + 1)) for x in range(1, cols) for y in range(rows)]
    segments += [(Point(x, y), Point(x + 1, y)) for y in range(1, rows) for x in range(cols)]
    creases = tuple(
        Crease(a, b, label) for (a, b), label in zip(segments, _labels(labels, len(segments)))
    )
    return CreasePattern(_rectangle(cols, rows), creases)


def fan(
    directions: Sequence[Tuple[object, object]], labels: Optional[Sequence[LabelLike]] = None
) -> CreasePattern:
    """Rays from the origin on the unbounded sheet."""
    if not directions:
        msg = "A fan needs at least one ray"
        raise InvalidInput(msg)
    creases = tuple(
        Crease(Point(0, 0), Point(dx, dy), label, ray=True)
        for (dx, dy), label in zip(directions, _labels(labels, len(directions)))
    )
    return CreasePattern(None, creases)


def _reflection(d: Direction) -> Tuple[Fraction, Fraction]:
    """``(c, s)`` of the reflection ``[[c, s], [s, -c]]`` across the line along ``d``."""
    p, q = d
    nn = p * p + q * q
    return (p * p - q * q) / nn, 2 * p * q / nn


def _primitive(x: int, y: int) -> Direction:
    g = gcd(x, y)
    return Fraction(x // g), Fraction(y // g)


def random_fan(k: int, seed: int = 0, radius: int = 6) -> CreasePattern:
    """A single-vertex fan of ``k`` rays whose reflections compose to the identity.

    The first ``k - 1`` directions are random; the last one is forced onto the
    axis of the reflection the others compose to, which is the Kawasaki
    condition for the vertex.
    """
    if k < 2 or k % 2:
        msg = f"A flat-foldable vertex needs an even degree of at least 2, got {k}"
        raise InvalidInput(msg)
    rng = np.random.default_rng(seed)
    for _ in range(RANDOM_FAN_RETRIES):
        picked = set()
        while len(picked) < k - 1:
            x, y = (int(v) for v in rng.integers(-radius, radius + 1, size=2))
            if (x, y) != (0, 0):
                picked.add(_primitive(x, y))
        dirs = sorted(picked, key=cmp_to_key(angle_cmp))

        # compose [[c, s], [s, -c]] in counterclockwise order
        a, b, c, d = Fraction(1), Fraction(0), Fraction(0), Fraction(1)
        for ray in dirs:
            rc, rs = _reflection(ray)
            a, b, c, d = rc * a + rs * c, rc * b + rs * d, rs * a - rc * c, rs * b - rc * d
        axis = (1 + a, c) if (1 + a, c) != (0, 0) else (Fraction(0), Fraction(1))
        for sign in (1, -1):
            last = (sign * axis[0], sign * axis[1])
            if angle_cmp(dirs[-1], last) < 0:
                rays = [*dirs, last]
                logger.debug("Random fan drawn", k=k, seed=seed, rays=len(rays))
                return fan(rays)
    msg = f"No Kawasaki fan of degree {k} found for seed {seed}"
    raise InvalidInput(msg)


def random_labeling(cp: CreasePattern, seed: int = 0) -> CreasePattern:
    """Assign M or V to every crease uniformly at random."""
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, 2, size=len(cp.creases))
    return cp.with_labels([Label.M if bit else Label.V for bit in picks])


def _boundary_points(size: int) -> List[Point]:
    out = [Point(x, 0) for x in range(size)]
    out += [Point(size, y) for y in range(size)]
    out += [Point(x, size) for x in range(size, 0, -1)]
    out += [Point(0, y) for y in range(size, 0, -1)]
    return out


def _same_side(p: Point, q: Point, size: int) -> bool:
    return any(
        (p.x == q.x == v) or (p.y == q.y == v) for v in (Fraction(0), Fraction(size))
    )


def random_chords(count: int, seed: int = 0, size: int = 4) -> CreasePattern:
    """Up to ``count`` pairwise non-crossing straight creases across a square sheet."""
    rng = np.random.default_rng(seed)
    rim = _boundary_points(size)
    chords: List[Segment] = []
    attempts = 0
    while len(chords) < count and attempts < 50 * max(count, 1):
        attempts += 1
        i, j = (int(v) for v in rng.choice(len(rim), size=2, replace=False))
        p, q = rim[i], rim[j]
        if _same_side(p, q, size):
            continue
        s = Segment(p, q)
        if all(_meets_at_ends(s, t) for t in chords):
            chords.append(s)
    creases = tuple(Crease(s.a, s.b) for s in chords)
    logger.debug("Random chords drawn", requested=count, drawn=len(creases), seed=seed)
    return CreasePattern(_rectangle(size, size), creases)


def _meets_at_ends(s: Segment, t: Segment) -> bool:
    hit = segment_intersection(s, t)
    if hit is None:
        return True
    return not isinstance(hit, Segment) and hit in (s.a, s.b) and hit in (t.a, t.b)


def triple_edge() -> List[List[int]]:
    """Two vertices joined by three parallel edges."""
    return [[3]]


def k33() -> List[List[int]]:
    return [[1, 1, 1], [1, 1, 1], [1, 1, 1]]


def cube() -> List[List[int]]:
    """The 3-cube with even-weight corners on the left."""
    even = [v for v in range(8) if bin(v).count("1") % 2 == 0]
    odd = [v for v in range(8) if bin(v).count("1") % 2 == 1]
    return [[1 if bin(u ^ w).count("1") == 1 else 0 for w in odd] for u in even]
