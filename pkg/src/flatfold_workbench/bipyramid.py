"""Cyclic polygons and the bipyramids built over them.

This is the one floating-point module of the workbench. A cyclic polygon
with sides ``S`` that contains the center of its circle has the radius ``r``
at which the central angles ``2*arcsin(s/(2r))`` add up to a full turn; the
bipyramid places two poles on the axis of that circle at height
``sqrt(l**2 - r**2)`` so every slanted edge has length ``l``.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import structlog
from opentelemetry import trace

from .config import get_settings
from .errors import ApexAngleExcess, InvalidInput, PoleTooShort, PreconditionViolated
from .metrics import track_engine_metrics

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

EDGE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CyclicPolygonSolution:
    r: float
    angles: Tuple[float, ...]
    residual: float
    iterations: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "angles": list(self.angles),
            "residual": self.residual,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class Bipyramid3D:
    """Equator on the ``z = 0`` plane, poles at ``(0, 0, +-s)``."""

    sides: Tuple[float, ...]
    pole_edge: float
    r: float
    s: float
    equator: np.ndarray

    @property
    def poles(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.array([0.0, 0.0, self.s]), np.array([0.0, 0.0, -self.s])

    def equator_edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.equator, -1, axis=0) - self.equator, axis=1)

    def pole_edge_lengths(self) -> np.ndarray:
        top, bottom = self.poles
        return np.concatenate(
            [
                np.linalg.norm(self.equator - top, axis=1),
                np.linalg.norm(self.equator - bottom, axis=1),
            ]
        )

    def max_edge_error(self) -> float:
        eq = np.abs(self.equator_edge_lengths() - np.asarray(self.sides))
        pole = np.abs(self.pole_edge_lengths() - self.pole_edge)
        return float(max(eq.max(), pole.max()))

    def check(self, tol: float = EDGE_TOLERANCE) -> bool:
        """Edge lengths match, the equator is concyclic and the poles mirror each other."""
        radii = np.linalg.norm(self.equator[:, :2], axis=1)
        return (
            self.max_edge_error() <= tol
            and bool(np.all(np.abs(radii - self.r) <= tol))
            and bool(np.all(self.equator[:, 2] == 0.0))
        )

    def to_dict(self) -> Dict[str, Any]:
        top, bottom = self.poles
        return {
            "sides": list(self.sides),
            "pole_edge": self.pole_edge,
            "r": self.r,
            "s": self.s,
            "equator": self.equator.tolist(),
            "poles": [top.tolist(), bottom.tolist()],
            "max_edge_error": self.max_edge_error(),
        }


def side_lengths(S: Sequence[float]) -> np.ndarray:
    sides = np.asarray(S, dtype=np.float64)
    if sides.ndim != 1 or sides.size < 3:
        msg = f"Need at least three side lengths, got {sides.size}"
        raise InvalidInput(msg)
    if not np.all(np.isfinite(sides)) or np.any(sides <= 0):
        msg = "Side lengths must be positive and finite"
        raise InvalidInput(msg)
    return sides


def central_angles(sides: np.ndarray, r: float) -> np.ndarray:
    return 2.0 * np.arcsin(np.clip(sides / (2.0 * r), -1.0, 1.0))


def angle_excess(sides: np.ndarray, r: float) -> float:
    """Total central angle minus a full turn; strictly decreasing in ``r``."""
    return float(central_angles(sides, r).sum() - 2.0 * math.pi)


def is_decreasing(sides: np.ndarray, lo: float, hi: float, samples: int = 33) -> bool:
    values = np.array([angle_excess(sides, r) for r in np.linspace(lo, hi, samples)])
    return bool(np.all(np.diff(values) < 0))


def regular_circumradius(s: float, n: int) -> float:
    """Closed form for the regular ``n``-gon with side ``s``."""
    return s / (2.0 * math.sin(math.pi / n))


@track_engine_metrics("circumradius")
def circumradius(S: Sequence[float], tol: Optional[float] = None) -> CyclicPolygonSolution:
    """Radius of the center-containing cyclic polygon with sides ``S``.

    Bisects the angle excess between ``max(S)/2`` and an upper bracket that
    starts at ``sum(S)/4`` and doubles until the excess turns negative.
    """
    settings = get_settings()
    tol = tol or settings.BISECTION_TOL
    sides = side_lengths(S)
    total, longest = float(sides.sum()), float(sides.max())
    if longest > total / (1.0 + math.pi / 2.0):
        msg = (
            f"Longest side {longest} exceeds sum/(1+pi/2) = {total / (1.0 + math.pi / 2.0)}; "
            "no center-containing cyclic polygon is guaranteed"
        )
        raise PreconditionViolated(msg)

    with tracer.start_as_current_span("circumradius") as span:
        lo = longest / 2.0
        hi = max(total / 4.0, lo)
        while angle_excess(sides, hi) > 0:
            hi *= 2.0

        iterations = 0
        mid = lo
        # The excess at max(S)/2 is nonnegative under the precondition.
        converged = angle_excess(sides, lo) <= tol
        while not converged and iterations < settings.BISECTION_MAX_ITER:
            iterations += 1
            mid = (lo + hi) / 2.0
            excess = angle_excess(sides, mid)
            if abs(excess) <= tol or mid in (lo, hi):
                break
            if excess > 0:
                lo = mid
            else:
                hi = mid

        residual = angle_excess(sides, mid)
        span.set_attribute("bipyramid.sides", len(sides))
        span.set_attribute("bipyramid.r", mid)
        span.set_attribute("bipyramid.iterations", iterations)
        logger.info("Circumradius found", r=mid, residual=residual, iterations=iterations)
        return CyclicPolygonSolution(
            r=mid,
            angles=tuple(float(a) for a in central_angles(sides, mid)),
            residual=residual,
            iterations=iterations,
        )


def realize(S: Sequence[float], ell: float, tol: Optional[float] = None) -> Bipyramid3D:
    """Bipyramid over the cyclic polygon ``S`` with pole edges of length ``ell``."""
    solution = circumradius(S, tol)
    sides = side_lengths(S)
    r = solution.r
    # Faces too narrow to close count a half turn each, so the excess stays monotone.
    excess = angle_excess(sides, ell)
    if excess > max(10.0 * (tol or get_settings().BISECTION_TOL), 2.0 * abs(solution.residual)):
        msg = f"Apex angles at a pole sum to {excess + 2.0 * math.pi}, not below 2*pi"
        raise ApexAngleExcess(msg)
    if ell <= r:
        msg = f"Pole edge {ell} does not exceed the circumradius {r}"
        raise PoleTooShort(msg)

    start = np.concatenate([[0.0], np.cumsum(solution.angles)[:-1]])
    equator = np.column_stack([r * np.cos(start), r * np.sin(start), np.zeros_like(start)])
    body = Bipyramid3D(
        sides=tuple(float(s) for s in sides),
        pole_edge=float(ell),
        r=r,
        s=math.sqrt(ell * ell - r * r),
        equator=equator,
    )
    logger.info("Bipyramid realized", r=r, s=body.s, max_edge_error=body.max_edge_error())
    return body


def permutation_check(
    S: Sequence[float], trials: int = 20, seed: int = 0, tol: Optional[float] = None
) -> bool:
    """Whether the circumradius is unchanged under random reorderings of ``S``."""
    tol = tol or get_settings().BISECTION_TOL
    sides = side_lengths(S)
    base = circumradius(sides, tol).r
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        r = circumradius(rng.permutation(sides), tol).r
        if abs(r - base) > 10 * tol * max(1.0, base):
            logger.warning("Circumradius changed under permutation", base=base, permuted=r)
            return False
    return True
