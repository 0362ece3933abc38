"""Fluid queue/server dynamics and cost accounting.

The state is (m, q): active server capacity and queued workload. A policy is
rolled forward with explicit Euler steps of size h; the workload recurrence
is clamped at zero, which realizes the serve-when-work-exists indicator of
the continuous model to first order.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .workload import ArrivalFunction

_REL_TOL = 1e-9


@dataclass(frozen=True)
class CostWeights:
    """Cost rates: omega per work-unit-hour waiting, beta per activated server,
    theta per server-hour of power. no_wait models the omega = infinity regime
    where capacity must cover instantaneous demand and the queue is empty."""

    omega: float
    beta: float
    theta: float = 0.0
    no_wait: bool = False

    def __post_init__(self):
        if self.beta <= 0 or not math.isfinite(self.beta):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if self.theta < 0 or not math.isfinite(self.theta):
            raise ValueError(f"theta must be nonnegative and finite, got {self.theta}")
        if not self.no_wait and not self.omega > 0:
            raise ValueError(f"omega must be positive outside no-wait mode, got {self.omega}")


@dataclass(frozen=True)
class CostBreakdown:
    flow_time: float
    switching: float
    power: float
    total: float

    @classmethod
    def build(cls, flow_time: float, switching: float, power: float) -> "CostBreakdown":
        return cls(flow_time, switching, power, flow_time + switching + power)


@dataclass(frozen=True)
class Trajectory:
    """Sampled rollout on a uniform grid: t[k] = k*h, with the driving rates."""

    h: float
    t: np.ndarray
    lam: np.ndarray
    m: np.ndarray
    q: np.ndarray

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    def sliced(self, n_points: int) -> "Trajectory":
        """Prefix of the rollout containing the first n_points samples."""
        return Trajectory(self.h, self.t[:n_points], self.lam[:n_points],
                          self.m[:n_points], self.q[:n_points])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "lambda", "m", "q"])
            for k in range(len(self.t)):
                writer.writerow([f"{self.t[k]:.10g}", f"{self.lam[k]:.10g}",
                                 f"{self.m[k]:.10g}", f"{self.q[k]:.10g}"])


def simulate(policy, lam: ArrivalFunction, weights: CostWeights, h: float) -> Trajectory:
    """Roll a policy forward over the workload with Euler steps of size h.

    The policy is reset, then asked once per grid point for the capacity at
    the next point given (t, m, q, lam(t)). m is clamped at zero and the
    workload follows q[k+1] = max(q[k] + h*(lam[k] - m[k]), 0) exactly.
    In no-wait mode the capacity is lifted to cover the instantaneous rate
    (charging switching for the induced jumps) and q stays identically zero.

    Pure function of its inputs; concurrent rollouts need separate policy
    instances since per-rollout state lives on the policy.
    """
    if h <= 0 or not math.isfinite(h):
        raise ValueError(f"h must be positive and finite, got {h}")
    ratio = lam.delta / h
    if h > lam.delta * (1 + _REL_TOL) or abs(ratio - round(ratio)) > _REL_TOL * ratio:
        raise ValueError(f"h={h} must divide the workload step {lam.delta}")
    n_steps = round(lam.horizon / h)
    t = np.arange(n_steps + 1) * h
    lam_samples = lam.sample(t)
    m = np.zeros(n_steps + 1)
    q = np.zeros(n_steps + 1)

    policy.reset(weights, h)
    for k in range(n_steps):
        m_next = policy.next_m(t[k], m[k], q[k], lam_samples[k])
        if not math.isfinite(m_next):
            raise ValueError(f"policy produced non-finite capacity {m_next} at t={t[k]}")
        if weights.no_wait:
            m_next = max(m_next, lam_samples[k + 1])
        m[k + 1] = max(m_next, 0.0)
        if not weights.no_wait:
            q[k + 1] = max(q[k] + h * (lam_samples[k] - m[k]), 0.0)
    return Trajectory(h=h, t=t, lam=lam_samples, m=m, q=q)


def cost(traj: Trajectory, weights: CostWeights) -> CostBreakdown:
    """Accumulated cost of a trajectory.

    flow = omega * trapezoid(q), switching = beta * sum of positive capacity
    increments (the initial activation from m(0)=0 included), power =
    theta * trapezoid(m).
    """
    if weights.no_wait:
        flow = 0.0
    else:
        flow = weights.omega * float(np.trapezoid(traj.q, dx=traj.h))
    switching = weights.beta * float(np.maximum(np.diff(traj.m), 0.0).sum())
    power = weights.theta * float(np.trapezoid(traj.m, dx=traj.h))
    return CostBreakdown.build(flow, switching, power)


def cost_increments(traj: Trajectory, weights: CostWeights) -> np.ndarray:
    """Per-step cost increments; sums to cost(traj, weights).total exactly."""
    dm = np.diff(traj.m)
    inc = weights.beta * np.maximum(dm, 0.0)
    inc += weights.theta * traj.h * (traj.m[:-1] + traj.m[1:]) / 2.0
    if not weights.no_wait:
        inc += weights.omega * traj.h * (traj.q[:-1] + traj.q[1:]) / 2.0
    return inc


def competitive_ratio(alg_cost: float, opt_cost: float) -> float:
    """alg/opt with the usual conventions: 1 when both vanish, inf when only
    the optimum does."""
    if alg_cost < 0 or opt_cost < 0:
        raise ValueError(f"costs must be nonnegative, got {alg_cost}, {opt_cost}")
    if opt_cost == 0:
        return 1.0 if alg_cost == 0 else math.inf
    return alg_cost / opt_cost
