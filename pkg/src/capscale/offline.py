"""Offline optimum via the slot-regular linear program.

For a workload that is constant on delta-slots, the offline problem restricted
to delta-regular schedules is the LP

    minimize   omega*delta * sum_i (q_i + q_{i+1})/2 + beta * sum_i d_i
               + theta*delta * sum_i m_i
    subject to q_{i+1} >= q_i + delta*lam_i - delta*m_i      (workload balance)
               d_i     >= m_i - m_{i-1},  m_0 = 0, q_1 = 0   (activations)
               q, d, m >= 0

In no-wait mode the queue variables are dropped and m_i >= lam_i is enforced
instead, which is exact (events at slot boundaries lose nothing).

Every solve self-certifies: primal residual, duality gap and complementary
slackness are recomputed from the returned primal/dual pair, since this LP is
the ground-truth reference for the rest of the package.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .dynamics import CostWeights
from .workload import ArrivalFunction, resample


class SolverError(RuntimeError):
    """LP solve did not reach certified optimality."""


@dataclass(frozen=True)
class LPInstance:
    """Standard-form instance: minimize c@x subject to A@x >= b, x >= 0."""

    c: np.ndarray
    A: sparse.csr_matrix
    b: np.ndarray
    n: int
    delta: float
    weights: CostWeights
    no_wait: bool
    offset: float          # constant cost term folded out of the objective
    m_shift: np.ndarray    # added back to the m block (no-wait lower bounds)


@dataclass(frozen=True)
class LPSolution:
    m: np.ndarray          # per-slot capacity, n entries
    d: np.ndarray          # per-slot activation increments, n entries
    q: np.ndarray          # workload at slot boundaries, n+1 entries, q[0] = 0
    objective: float
    primal_residual: float
    duality_gap: float
    comp_slack: float
    delta: float
    no_wait: bool

    def to_json(self) -> str:
        return json.dumps({
            "delta": self.delta,
            "objective": self.objective,
            "m": list(self.m),
            "q": list(self.q),
            "d": list(self.d),
            "duality_gap": self.duality_gap,
        })


def build_lp(lam: ArrivalFunction, weights: CostWeights,
             delta: float | None = None, no_wait: bool | None = None) -> LPInstance:
    """Assemble the LP for a workload at the requested slot width.

    The workload must be regular at `delta` (resample raises otherwise).
    """
    if delta is None:
        delta = lam.delta
    lam = resample(lam, delta)
    if no_wait is None:
        no_wait = weights.no_wait
    n = lam.n_segments
    rates = np.asarray(lam.rates)

    rows, cols, vals = [], [], []

    def add(row, col, val):
        rows.append(row)
        cols.append(col)
        vals.append(val)

    if no_wait:
        # Variables [u_1..u_n, d_1..d_n] with m = lam + u.
        c = np.concatenate([np.full(n, weights.theta * delta), np.full(n, weights.beta)])
        b = np.empty(n)
        for i in range(n):
            add(i, n + i, 1.0)       # d_i
            add(i, i, -1.0)          # -u_i
            if i > 0:
                add(i, i - 1, 1.0)   # +u_{i-1}
            b[i] = rates[i] - (rates[i - 1] if i > 0 else 0.0)
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(n, 2 * n))
        offset = weights.theta * delta * float(rates.sum())
        return LPInstance(c, A, b, n, delta, weights, True, offset, rates.copy())

    # Variables [m_1..m_n, d_1..d_n, q_2..q_{n+1}].
    c = np.concatenate([
        np.full(n, weights.theta * delta),
        np.full(n, weights.beta),
        np.full(n, weights.omega * delta),
    ])
    c[-1] = weights.omega * delta / 2.0  # q_{n+1} borders one slot only
    b = np.empty(2 * n)
    for i in range(n):
        # q_{i+1} - q_i + delta*m_i >= delta*lam_i   (q_1 = 0 eliminated)
        add(i, 2 * n + i, 1.0)
        if i > 0:
            add(i, 2 * n + i - 1, -1.0)
        add(i, i, delta)
        b[i] = delta * rates[i]
        # d_i - m_i + m_{i-1} >= 0
        add(n + i, n + i, 1.0)
        add(n + i, i, -1.0)
        if i > 0:
            add(n + i, i - 1, 1.0)
        b[n + i] = 0.0
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(2 * n, 3 * n))
    return LPInstance(c, A, b, n, delta, weights, False, 0.0, np.zeros(n))


def solve_lp(lp: LPInstance) -> LPSolution:
    """Solve with the dual-simplex engine and certify the result.

    Deterministic for a fixed instance. Raises SolverError when the engine
    stops before optimality (iteration limit included) or when the recomputed
    certificates exceed their tolerances.
    """
    res = linprog(
        lp.c,
        A_ub=(-lp.A).tocsc(),
        b_ub=-lp.b,
        bounds=(0, None),
        method="highs-ds",
        options={
            "presolve": True,
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if res.status == 1:
        raise SolverError(f"iteration limit reached: {res.message}")
    if res.status != 0:
        raise SolverError(f"LP solve failed (status {res.status}): {res.message}")

    x = np.asarray(res.x)
    y = -np.asarray(res.ineqlin.marginals)  # duals of A@x >= b, y >= 0
    slack = lp.A @ x - lp.b
    reduced = lp.c - lp.A.T @ y
    primal_residual = float(max(np.maximum(-slack, 0.0).max(initial=0.0),
                                np.maximum(-x, 0.0).max(initial=0.0)))
    duality_gap = float(abs(lp.c @ x - lp.b @ y))
    comp_slack = float(max(np.abs(y * slack).max(initial=0.0),
                           np.abs(x * reduced).max(initial=0.0)))

    objective = float(lp.c @ x + lp.offset)
    scale = 1.0 + abs(objective)
    if duality_gap > 1e-8 * scale:
        raise SolverError(f"duality gap {duality_gap:.3e} above 1e-8*(1+|obj|)")
    if primal_residual > 1e-9 * scale:
        raise SolverError(f"primal residual {primal_residual:.3e} above tolerance")

    n = lp.n
    m = x[:n] + lp.m_shift
    d = x[n:2 * n]
    if lp.no_wait:
        q = np.zeros(n + 1)
    else:
        q = np.concatenate([[0.0], x[2 * n:]])
    return LPSolution(m=m, d=d, q=q, objective=objective,
                      primal_residual=primal_residual, duality_gap=duality_gap,
                      comp_slack=comp_slack, delta=lp.delta, no_wait=lp.no_wait)


def solve(lam: ArrivalFunction, weights: CostWeights,
          delta: float | None = None, no_wait: bool | None = None) -> LPSolution:
    return solve_lp(build_lp(lam, weights, delta, no_wait))


def lp_schedule(solution: LPSolution) -> Callable[[float], float]:
    """The solved capacity as a step function of time: m(i*delta + s) = m[i]."""
    m = np.asarray(solution.m)
    delta = solution.delta
    n = len(m)

    def schedule(t: float) -> float:
        i = int(math.floor(t / delta + 1e-9))
        return float(m[min(max(i, 0), n - 1)])

    return schedule


def approximation_factor(weights: CostWeights, delta: float) -> float:
    """Multiplicative guarantee of the LP objective against the true optimum:
    (1 + omega*delta/(2 theta)) * (1 + omega*delta^2/beta) for slot-regular
    workloads. Degenerates to inf as theta -> 0 (refine delta instead there).
    In no-wait mode the LP is exact and the factor is 1."""
    if weights.no_wait:
        return 1.0
    if weights.theta == 0:
        return math.inf
    return (1.0 + weights.omega * delta / (2.0 * weights.theta)) \
        * (1.0 + weights.omega * delta ** 2 / weights.beta)


def opt_cost(lam: ArrivalFunction, weights: CostWeights,
             delta: float | None = None) -> tuple[float, float]:
    """LP objective plus its guarantee factor relative to the continuous optimum."""
    solution = solve(lam, weights, delta)
    return solution.objective, approximation_factor(weights, solution.delta)
