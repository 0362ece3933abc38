"""Arrival-rate functions, predictions, and prediction-accuracy metrics.

Time is measured in hours and work in abstract work units (for trace-driven
workloads one unit is one request). Every rate function is piecewise constant
on a uniform grid, which keeps all the integrals in the package exact.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HOURS_PER_SECOND = 1.0 / 3600.0

_REL_TOL = 1e-9


class GridMismatchError(ValueError):
    """Raised when two rate functions do not share step and horizon."""


def _segments_for(horizon: float, delta: float) -> int:
    if not (delta > 0 and math.isfinite(delta)):
        raise ValueError(f"step must be positive and finite, got {delta}")
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    ratio = horizon / delta
    n = round(ratio)
    if n < 1 or abs(ratio - n) > _REL_TOL * max(1.0, ratio):
        raise ValueError(f"horizon {horizon} is not a positive multiple of step {delta}")
    return n


@dataclass(frozen=True)
class ArrivalFunction:
    """Piecewise-constant arrival rate on a uniform grid.

    ``rates[i]`` is the rate (work units per hour) held on the half-open
    interval ``[i*delta, (i+1)*delta)``. The horizon is ``delta * len(rates)``.
    Instances are immutable and safe to share between threads.
    """

    delta: float
    rates: tuple

    def __post_init__(self):
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"step must be positive and finite, got {self.delta}")
        if len(self.rates) == 0:
            raise ValueError("at least one rate segment is required")
        for r in self.rates:
            if not math.isfinite(r) or r < 0:
                raise ValueError(f"rates must be finite and nonnegative, got {r}")

    @property
    def horizon(self) -> float:
        return self.delta * len(self.rates)

    @property
    def n_segments(self) -> int:
        return len(self.rates)

    @property
    def total_work(self) -> float:
        return self.delta * float(sum(self.rates))

    @property
    def max_rate(self) -> float:
        return max(self.rates)

    def segment_index(self, t: float) -> int:
        # The nudge keeps exact grid points in their own (left-closed) segment
        # despite t/delta rounding down by one ulp.
        i = int(math.floor(t / self.delta + 1e-9))
        return min(max(i, 0), len(self.rates) - 1)

    def rate_at(self, t: float) -> float:
        if t < 0 or t > self.horizon * (1 + _REL_TOL):
            return 0.0
        return self.rates[self.segment_index(t)]

    def sample(self, times: np.ndarray) -> np.ndarray:
        """Rates at an array of time points (clamped to the horizon)."""
        times = np.asarray(times, dtype=float)
        idx = np.floor(times / self.delta + 1e-9).astype(int)
        idx = np.clip(idx, 0, len(self.rates) - 1)
        out = np.asarray(self.rates, dtype=float)[idx]
        return np.where((times < 0) | (times > self.horizon * (1 + _REL_TOL)), 0.0, out)

    def integral(self, a: float, b: float) -> float:
        """Exact integral of the rate over [a, b] (clipped to [0, horizon])."""
        a = max(0.0, min(a, self.horizon))
        b = max(0.0, min(b, self.horizon))
        if b <= a:
            return 0.0
        rates = np.asarray(self.rates)
        ia, ib = self.segment_index(a), self.segment_index(b - 1e-15 * max(1.0, b))
        if ia == ib:
            return float(rates[ia] * (b - a))
        total = rates[ia] * ((ia + 1) * self.delta - a)
        total += self.delta * float(rates[ia + 1:ib].sum())
        total += rates[ib] * (b - ib * self.delta)
        return float(total)

    def same_grid(self, other: "ArrivalFunction") -> bool:
        return (
            abs(self.delta - other.delta) <= _REL_TOL * self.delta
            and len(self.rates) == len(other.rates)
        )


@dataclass(frozen=True)
class AccuracyReport:
    """Prediction error summary: mean absolute error and accuracy level."""

    mae: float
    eta: float
    opt_used: float


def make_constant(rate: float, horizon: float, delta: float) -> ArrivalFunction:
    """Constant-rate workload over [0, horizon]."""
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate}")
    n = _segments_for(horizon, delta)
    return ArrivalFunction(delta, (float(rate),) * n)


def make_sinusoid(mean: float, amplitude: float, period: float,
                  horizon: float, delta: float) -> ArrivalFunction:
    """Sinusoidal workload: mean + amplitude*sin(2*pi*t/period), sampled per segment.

    The amplitude may not exceed the mean, so rates stay nonnegative (values
    within floating tolerance of zero are clamped).
    """
    if not 0 <= amplitude <= mean:
        raise ValueError(f"need 0 <= amplitude <= mean, got amplitude={amplitude} mean={mean}")
    if period <= 0:
        raise ValueError(f"period must be positive, got {period}")
    n = _segments_for(horizon, delta)
    t = np.arange(n) * delta
    values = mean + amplitude * np.sin(2.0 * math.pi * t / period)
    if values.min() < -1e-9 * max(1.0, mean):
        raise ValueError("sinusoid dipped below zero beyond floating tolerance")
    return ArrivalFunction(delta, tuple(np.maximum(values, 0.0)))


def make_step(low: float, high: float, half_period: float,
              horizon: float, delta: float) -> ArrivalFunction:
    """Square-wave workload alternating low/high every half_period, starting low."""
    if not 0 <= low <= high:
        raise ValueError(f"need 0 <= low <= high, got low={low} high={high}")
    n = _segments_for(horizon, delta)
    k = half_period / delta
    k_int = round(k)
    if k_int < 1 or abs(k - k_int) > _REL_TOL * max(1.0, k):
        raise ValueError(f"half_period {half_period} is not a multiple of step {delta}")
    values = [low if (i // k_int) % 2 == 0 else high for i in range(n)]
    return ArrivalFunction(delta, tuple(values))


def ingest_trace(rows: Iterable[Sequence[float]], delta: float) -> ArrivalFunction:
    """Bucket (timestamp, count) events into delta-wide bins; rate = count / delta.

    Bins are left-closed and aligned to multiples of delta; the horizon spans
    the bin of the first event through the bin of the last, so a partial
    trailing bin is padded to a full bin with its observed count. Timestamps
    are in hours (see load_trace_csv for POSIX-second input).
    """
    if delta <= 0:
        raise ValueError(f"step must be positive, got {delta}")
    rows = list(rows)
    if not rows:
        raise ValueError("empty trace")
    prev = -math.inf
    for ts, count in rows:
        if ts < prev:
            raise ValueError("timestamps must be nondecreasing")
        if count < 0:
            raise ValueError(f"negative count {count} at t={ts}")
        prev = ts
    first = rows[0][0]
    origin = math.floor(first / delta + 1e-9) * delta
    last_bin = int(math.floor((rows[-1][0] - origin) / delta + 1e-9))
    counts = np.zeros(last_bin + 1)
    for ts, count in rows:
        i = int(math.floor((ts - origin) / delta + 1e-9))
        counts[min(i, last_bin)] += count
    return ArrivalFunction(delta, tuple(counts / delta))


def load_trace_csv(path, delta: float) -> ArrivalFunction:
    """Read a `timestamp,requests` CSV (POSIX seconds, counts) into a workload."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "timestamp" not in reader.fieldnames \
                or "requests" not in reader.fieldnames:
            raise ValueError(f"{path}: expected header 'timestamp,requests'")
        for rec in reader:
            rows.append((float(rec["timestamp"]) * HOURS_PER_SECOND, float(rec["requests"])))
    return ingest_trace(rows, delta)


PREDICTION_KINDS = ("zero", "perfect", "constant", "opposite", "moving_average")


def make_prediction(lam: ArrivalFunction, kind: str, param: float | None = None) -> ArrivalFunction:
    """Build a prediction on the same grid as the workload.

    kind:
      zero             -- no information, all-zero rate
      perfect          -- copy of the workload
      constant         -- flat rate `param`
      opposite         -- `param - lam(t)`; param must cover the max rate
      moving_average   -- truncated centered average over a window of `param` hours
    """
    delta, n, horizon = lam.delta, lam.n_segments, lam.horizon
    if kind == "zero":
        return ArrivalFunction(delta, (0.0,) * n)
    if kind == "perfect":
        return ArrivalFunction(delta, lam.rates)
    if kind == "constant":
        if param is None or param < 0:
            raise ValueError("constant prediction needs a nonnegative rate")
        return ArrivalFunction(delta, (float(param),) * n)
    if kind == "opposite":
        if param is None:
            raise ValueError("opposite prediction needs a cap")
        if param < lam.max_rate:
            raise ValueError(f"cap {param} is below the maximum rate {lam.max_rate}")
        return ArrivalFunction(delta, tuple(param - r for r in lam.rates))
    if kind == "moving_average":
        if param is None or param <= 0:
            raise ValueError("moving_average prediction needs a positive window")
        half = param / 2.0
        values = []
        for i in range(n):
            t = (i + 0.5) * delta
            width = min(t, half) + min(horizon - t, half)
            values.append(lam.integral(t - half, t + half) / width)
        return ArrivalFunction(delta, tuple(values))
    raise ValueError(f"unknown prediction kind {kind!r} (expected one of {PREDICTION_KINDS})")


def mae(pred: ArrivalFunction, actual: ArrivalFunction) -> float:
    """Mean absolute error between two rate functions on the same grid.

    Exact for piecewise-constant inputs: (1/T) * sum_i delta * |pred_i - actual_i|.
    """
    if not pred.same_grid(actual):
        raise GridMismatchError(
            f"grids differ: delta {pred.delta} vs {actual.delta}, "
            f"segments {pred.n_segments} vs {actual.n_segments}"
        )
    p = np.asarray(pred.rates)
    a = np.asarray(actual.rates)
    return float(np.abs(p - a).sum() * actual.delta / actual.horizon)


def accuracy_eta(pred: ArrivalFunction, actual: ArrivalFunction, opt_cost: float) -> AccuracyReport:
    """Smallest accuracy level eta for which the prediction is eta-accurate.

    eta = MAE * T / opt_cost. A degenerate reference optimum (opt_cost <= 0)
    leaves eta undefined: reported as inf when the error is nonzero, 0 when
    the prediction is exact.
    """
    err = mae(pred, actual)
    if opt_cost > 0:
        eta = err * actual.horizon / opt_cost
    else:
        eta = 0.0 if err == 0.0 else math.inf
    return AccuracyReport(mae=err, eta=eta, opt_used=float(opt_cost))


def resample(lam: ArrivalFunction, delta: float) -> ArrivalFunction:
    """Re-express the workload on a different grid, exactly or fail.

    Refining (delta divides the native step) repeats segments. Coarsening is
    only possible when the rate is constant within each coarse block;
    otherwise the function is not regular at the requested step.
    """
    if delta <= 0:
        raise ValueError(f"step must be positive, got {delta}")
    if abs(delta - lam.delta) <= _REL_TOL * lam.delta:
        return lam
    if delta < lam.delta:
        k = lam.delta / delta
        k_int = round(k)
        if abs(k - k_int) > _REL_TOL * k:
            raise ValueError(f"step {delta} does not divide native step {lam.delta}")
        rates = np.repeat(lam.rates, k_int)
        return ArrivalFunction(delta, tuple(rates))
    k = delta / lam.delta
    k_int = round(k)
    if abs(k - k_int) > _REL_TOL * k or lam.n_segments % k_int != 0:
        raise ValueError(f"native step {lam.delta} does not divide step {delta}")
    blocks = np.asarray(lam.rates).reshape(-1, k_int)
    if not np.all(blocks == blocks[:, :1]):
        raise ValueError(f"workload is not regular at step {delta}")
    return ArrivalFunction(delta, tuple(blocks[:, 0]))
