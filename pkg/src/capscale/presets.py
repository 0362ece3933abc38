"""Named parameter presets and the fixed benchmark suite.

The "paper-dc" weights model a data center where a server draws 0.85 kW at
0.15 cents/kWh (theta = 0.1275 cents per server-hour), activation costs four
hours of power (beta = 0.51 cents), and waiting work costs omega = 0.1 cents
per work-unit-hour. One work unit is one request for trace workloads.
"""
from __future__ import annotations

import numpy as np

from .dynamics import CostWeights
from .workload import ArrivalFunction, make_constant, make_sinusoid, make_step

SUITE_SEED = 20260808
SUITE_DELTA = 1.0
SUITE_H = 0.01


def paper_dc_weights(no_wait: bool = False) -> CostWeights:
    theta = 0.85 * 0.15  # kW times cents/kWh
    return CostWeights(omega=0.1, beta=4.0 * theta, theta=theta, no_wait=no_wait)


WEIGHT_PRESETS = {"paper-dc": paper_dc_weights}


def poisson_trace(mean_rate: float, horizon: float, delta: float,
                  rng: np.random.Generator) -> ArrivalFunction:
    """Hourly Poisson request counts bucketed into a rate function."""
    n = round(horizon / delta)
    counts = rng.poisson(mean_rate * delta, size=n)
    return ArrivalFunction(delta, tuple(counts / delta))


def standard_suite() -> list[tuple[str, ArrivalFunction]]:
    """Twenty named instances: constants, sinusoids, steps, and seeded
    Poisson-bucketed random traces, horizons up to 48 h on a 1 h grid."""
    d = SUITE_DELTA
    items: list[tuple[str, ArrivalFunction]] = []
    for rate, horizon in [(50, 24), (200, 24), (500, 48), (800, 36), (1000, 24)]:
        items.append((f"const-{rate}x{horizon}", make_constant(rate, horizon, d)))
    for mean, amp, period, horizon in [(500, 500, 24, 24), (500, 300, 24, 48),
                                       (300, 300, 12, 24), (800, 400, 24, 48),
                                       (100, 100, 6, 36)]:
        items.append((f"sin-{mean}a{amp}p{period}x{horizon}",
                      make_sinusoid(mean, amp, period, horizon, d)))
    for low, high, half, horizon in [(0, 1000, 6, 24), (100, 900, 12, 48),
                                     (0, 500, 3, 24), (200, 800, 6, 36),
                                     (50, 950, 24, 48)]:
        items.append((f"step-{low}-{high}h{half}x{horizon}",
                      make_step(low, high, half, horizon, d)))
    rng = np.random.default_rng(SUITE_SEED)
    for mean, horizon in [(100, 24), (300, 24), (500, 36), (700, 48), (900, 24)]:
        items.append((f"poisson-{mean}x{horizon}", poisson_trace(mean, horizon, d, rng)))
    return items


def sinusoid_suite() -> list[tuple[str, ArrivalFunction]]:
    return [item for item in standard_suite() if item[0].startswith("sin-")]


PREDICTION_TYPES = ("zero", "constant", "opposite", "moving_average", "perfect")


def suite_prediction(lam: ArrivalFunction, kind: str) -> ArrivalFunction:
    """Benchmark prediction of each kind for a suite instance."""
    from .workload import make_prediction

    if kind == "constant":
        return make_prediction(lam, "constant", 500.0)
    if kind == "opposite":
        return make_prediction(lam, "opposite", max(1000.0, lam.max_rate))
    if kind == "moving_average":
        return make_prediction(lam, "moving_average", 3.0)
    return make_prediction(lam, kind)
