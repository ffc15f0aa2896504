"""Prometheus metrics for the engines."""

import time
from functools import wraps
from typing import Any, Callable

from prometheus_client import Counter, Histogram

# Engine metrics
ENGINE_RUNS = Counter(
    "flatfold_engine_runs_total",
    "Total number of engine runs",
    ["engine", "outcome"],
)

ENGINE_DURATION = Histogram(
    "flatfold_engine_duration_seconds",
    "Engine run duration in seconds",
    ["engine"],
)

# Layer DP metrics
DP_BAG_STATES = Histogram(
    "flatfold_dp_bag_states",
    "Valid states stored per nice decomposition node",
    buckets=[1, 2, 4, 8, 16, 64, 256, 1024, 4096, 16384, 65536],
)

DP_WIDTH = Histogram(
    "flatfold_dp_decomposition_width",
    "Width of the decomposition the DP ran on",
    buckets=[0, 1, 2, 3, 4, 5, 6, 8, 10, 12],
)

# Brute-force metrics
ORACLE_LAYERINGS = Counter(
    "flatfold_oracle_layerings_total",
    "Global layerings examined by the oracle",
)

FLAP_STATES = Counter(
    "flatfold_flap_states_total",
    "Valid flap states produced by enumeration",
)

NCL_ORIENTATIONS = Counter(
    "flatfold_ncl_orientations_total",
    "NCL orientations examined by exhaustive enumeration",
)


def track_engine_metrics(engine: str) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """Decorator to track run count, outcome and duration of an engine call."""

    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start_time = time.perf_counter()
            outcome = "ok"
            try:
                return func(*args, **kwargs)
            except Exception as e:
                outcome = type(e).__name__
                raise
            finally:
                ENGINE_DURATION.labels(engine=engine).observe(time.perf_counter() - start_time)
                ENGINE_RUNS.labels(engine=engine, outcome=outcome).inc()

        return wrapper

    return decorator
