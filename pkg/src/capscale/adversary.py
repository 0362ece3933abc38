"""Adversarial lower-bound instance generators.

Each attack drives a black-box policy through the simulator, adapts the
arrival function to the observed behavior, and certifies the resulting cost
ratio against an explicit feasible reference schedule. The reference cost is
never assumed: the schedule from the underlying argument is re-simulated
through the dynamics and its measured cost reported.

All attacks are deterministic given the policy and parameters. They target
deterministic, causal policies that do not condition on the time horizon.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dynamics import CostWeights, Trajectory, competitive_ratio, cost, simulate
from .policies import FixedSchedule, IdleTimeoutTimer, Policy
from .workload import ArrivalFunction, make_constant

PolicyFactory = Callable[[Optional[ArrivalFunction]], Policy]

# First eligible threshold detection for the online attack, in grid steps;
# earlier crossings are below grid resolution and the argument is vacuous there.
ONLINE_MIN_STEPS = 10
ONLINE_THRESHOLD = 0.885
ONLINE_SPLIT_TIME = 1.225
ONLINE_CLAIMED = 2.549


@dataclass(frozen=True)
class AdversaryReport:
    attack: str
    branch: str
    instance: ArrivalFunction
    weights: CostWeights
    alg_cost: float
    opt_upper_bound: float
    ratio: float
    claimed_bound: float
    satisfied: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "attack": self.attack,
            "branch": self.branch,
            "weights": {"omega": self.weights.omega, "beta": self.weights.beta,
                        "theta": self.weights.theta, "no_wait": self.weights.no_wait},
            "alg_cost": self.alg_cost,
            "opt_upper_bound": self.opt_upper_bound,
            "ratio": ("inf" if math.isinf(self.ratio) else self.ratio),
            "claimed_bound": ("inf" if math.isinf(self.claimed_bound) else self.claimed_bound),
            "satisfied": self.satisfied,
            "instance": {"delta": self.instance.delta, "rates": list(self.instance.rates)},
            "details": self.details,
        }
        return json.dumps(payload)


def _reference_cost(schedule: Callable[[float], float], instance: ArrivalFunction,
                    weights: CostWeights, h: float) -> float:
    """Measured cost of an explicit feasible schedule on the instance."""
    traj = simulate(FixedSchedule(schedule), instance, weights, h)
    return cost(traj, weights).total


def online_lower_bound(policy_factory: PolicyFactory, h: float = 1e-3) -> AdversaryReport:
    """Purely-online attack: unit arrivals, zero prediction, watch for the
    capacity to cross the 0.885*t^2 threshold.

    If the crossing happens by t = 1.225 the instance stops there and the
    do-nothing schedule certifies the optimum; otherwise the instance runs to
    t = 3 where a single permanently-on server does. Any deterministic online
    policy pays at least 2.549x in the continuum; grid slack is about 2%.
    """
    weights = CostWeights(omega=1.0, beta=1.0, theta=0.0)
    horizon = 3.0
    prediction = make_constant(0.0, horizon, 1.0)
    probe = make_constant(1.0, horizon, 1.0)
    traj = simulate(policy_factory(prediction), probe, weights, h)

    crossing = None
    k_max = min(len(traj.t) - 1, int(math.floor(ONLINE_SPLIT_TIME / h + 1e-9)))
    for k in range(ONLINE_MIN_STEPS, k_max + 1):
        if traj.m[k] > ONLINE_THRESHOLD * traj.t[k] ** 2:
            crossing = k
            break

    if crossing is not None:
        tau = traj.t[crossing]
        instance = make_constant(1.0, tau, tau)
        alg = cost(traj.sliced(crossing + 1), weights).total
        opt = _reference_cost(lambda t: 0.0, instance, weights, h)
        branch = "threshold-crossed"
        details = {"tau": float(tau), "m_at_tau": float(traj.m[crossing])}
    else:
        instance = probe
        alg = cost(traj, weights).total
        opt = _reference_cost(lambda t: 1.0, instance, weights, h)
        branch = "never-crossed"
        details = {"tau": None}

    ratio = competitive_ratio(alg, opt)
    return AdversaryReport(
        attack="online", branch=branch, instance=instance, weights=weights,
        alg_cost=alg, opt_upper_bound=opt, ratio=ratio,
        claimed_bound=ONLINE_CLAIMED,
        satisfied=ratio >= ONLINE_CLAIMED * 0.98, details=details,
    )


def timer_lower_bound(tau: float, horizon: float, epsilon: float,
                      weights: CostWeights | None = None,
                      policy_factory: PolicyFactory | None = None) -> AdversaryReport:
    """Attack on idle-timeout policies: load until the first activation, then
    feed epsilon-wide bursts every tau so capacity never times out.

    The reference schedule serves the bursts with epsilon/tau trickling
    capacity. The ratio grows without bound as the horizon grows and epsilon
    shrinks.
    """
    if not 0 < epsilon < tau:
        raise ValueError(f"need 0 < epsilon < tau, got epsilon={epsilon} tau={tau}")
    weights = weights or CostWeights(1.0, 1.0, 1.0)
    policy_factory = policy_factory or (lambda _: IdleTimeoutTimer(tau))
    for name, length in (("tau", tau), ("horizon", horizon)):
        ratio = length / epsilon
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"{name} must be a multiple of epsilon")
    h = epsilon
    n = round(horizon / epsilon)
    period = round(tau / epsilon)

    probe = make_constant(2.0, horizon, epsilon)
    probe_traj = simulate(policy_factory(None), probe, weights, h)
    active = np.nonzero(probe_traj.m >= 1.0)[0]

    if len(active) == 0:
        instance = probe
        alg = cost(probe_traj, weights).total
        opt = _reference_cost(lambda t: 2.0, instance, weights, h)
        claimed = (weights.omega * horizon ** 2 / 2.0) \
            / (2.0 * weights.beta + 2.0 * weights.theta * horizon)
        branch = "never-activates"
        details = {"t0": None}
    else:
        k0 = int(active[0])
        t0 = k0 * h
        rates = np.zeros(n)
        rates[:k0] = 2.0
        burst = (np.arange(n - k0) % period) == 0
        rates[k0:][burst] = 1.0
        instance = ArrivalFunction(epsilon, tuple(rates))
        traj = simulate(policy_factory(None), instance, weights, h)
        alg = cost(traj, weights).total
        trickle = epsilon / tau
        opt = _reference_cost(lambda t, t0=t0: 2.0 if t <= t0 + 1e-12 else trickle,
                              instance, weights, h)
        opt_formula = (2.0 * weights.beta + 2.0 * weights.theta * t0
                       + epsilon * weights.theta * horizon / tau
                       + epsilon * weights.omega * horizon / 2.0)
        claimed = (weights.beta + weights.theta * (horizon - t0)) / opt_formula
        branch = "burst-train"
        details = {"t0": float(t0), "opt_bound_formula": opt_formula}

    ratio = competitive_ratio(alg, opt)
    return AdversaryReport(
        attack="timer", branch=branch, instance=instance, weights=weights,
        alg_cost=alg, opt_upper_bound=opt, ratio=ratio, claimed_bound=claimed,
        satisfied=ratio >= claimed * 0.98,
        details={**details, "tau": tau, "epsilon": epsilon, "horizon": horizon},
    )


def consistency_tradeoff(policy_factory: PolicyFactory, slack: float,
                         h: float = 1e-3) -> AdversaryReport:
    """Consistency/robustness trade-off attack with the flat rate-2 prediction.

    The adversary watches the policy over an initial sqrt(2)*slack window of
    rate-2 arrivals. A policy that under-provisions there gets the perfect
    prediction instance, where it cannot be (1+slack)-consistent; one that
    provisions a full server gets the vanishing continuation, where it pays
    at least 1/(4*slack) times the trickle schedule. No deterministic policy
    escapes both branches.
    """
    if slack <= 0:
        raise ValueError(f"slack must be positive, got {slack}")
    weights = CostWeights(1.0, 1.0, 0.0)
    k_sw = max(1, round(math.sqrt(2.0) * slack / h))
    t_sw = k_sw * h
    horizon = 2.0 + t_sw
    prediction = make_constant(2.0, horizon, h)

    steady = make_constant(2.0, horizon, h)
    traj1 = simulate(policy_factory(prediction), steady, weights, h)
    m_bar = float(traj1.m[:k_sw].max()) if k_sw > 0 else 0.0

    if m_bar < 1.0:
        instance = steady
        alg = cost(traj1, weights).total
        opt = _reference_cost(lambda t: 2.0, instance, weights, h)
        ratio = competitive_ratio(alg, opt)
        claimed = 1.0 + slack
        return AdversaryReport(
            attack="tradeoff", branch="consistency", instance=instance, weights=weights,
            alg_cost=alg, opt_upper_bound=opt, ratio=ratio, claimed_bound=claimed,
            satisfied=ratio > claimed,
            details={"m_bar": m_bar, "t_switch": t_sw, "prediction_perfect": True},
        )

    rates = np.zeros(round(horizon / h))
    rates[:k_sw] = 2.0
    instance = ArrivalFunction(h, tuple(rates))
    traj2 = simulate(policy_factory(prediction), instance, weights, h)
    alg = cost(traj2, weights).total
    opt = _reference_cost(lambda t: 2.0 * slack, instance, weights, h)
    ratio = competitive_ratio(alg, opt)
    claimed = 1.0 / (4.0 * slack)
    return AdversaryReport(
        attack="tradeoff", branch="robustness", instance=instance, weights=weights,
        alg_cost=alg, opt_upper_bound=opt, ratio=ratio, claimed_bound=claimed,
        satisfied=ratio >= claimed * 0.98,
        details={"m_bar": m_bar, "t_switch": t_sw,
                 "prediction_work_gap": 2.0 * (horizon - t_sw)},
    )


def setup_time_lower_bound(policy_factory: PolicyFactory, setup_time: float,
                           omega: float = 1.0, beta: float = 1.0,
                           h: float | None = None) -> AdversaryReport:
    """Attack exploiting an activation latency: capacity requested at time t
    becomes effective at t + setup_time.

    Silence for the setup window, then either punish pre-provisioning with a
    zero workload (unbounded ratio) or punish idleness with a unit rate the
    policy can no longer serve in time (ratio omega*t0^2/(2*beta)).
    """
    if setup_time <= 0:
        raise ValueError(f"setup_time must be positive, got {setup_time}")
    weights = CostWeights(omega, beta, 0.0)
    h = h or setup_time / 200.0
    lag = round(setup_time / h)
    if lag < 1 or abs(setup_time / h - lag) > 1e-9 * max(1.0, setup_time / h):
        raise ValueError("h must divide setup_time")
    n = 2 * lag
    t = np.arange(n + 1) * h
    requested = np.zeros(n + 1)
    m_eff = np.zeros(n + 1)
    q = np.zeros(n + 1)
    lam = np.zeros(n + 1)
    policy = policy_factory(None)
    policy.reset(weights, h)

    rho = None
    for k in range(n):
        if k == lag:
            # Everything requested by the setup deadline is now fixed; choose
            # the continuation that hurts the observed behavior.
            rho = 1.0 if requested[1:lag + 1].max(initial=0.0) <= 0.0 else 0.0
            lam[lag:] = rho
        r = policy.next_m(t[k], m_eff[k], q[k], lam[k])
        if not math.isfinite(r):
            raise ValueError(f"policy produced non-finite capacity {r}")
        requested[k + 1] = max(r, 0.0)
        m_eff[k + 1] = requested[k + 1 - lag] if k + 1 >= lag else 0.0
        q[k + 1] = max(q[k] + h * (lam[k] - m_eff[k]), 0.0)

    instance = ArrivalFunction(setup_time, (0.0, rho))
    traj = Trajectory(h=h, t=t, lam=lam, m=m_eff, q=q)
    alg = cost(traj, weights).total

    if rho == 0.0:
        opt = 0.0  # the empty schedule is feasible and free
        claimed = math.inf
        branch = "pre-provisioned"
    else:
        opt = _reference_cost(lambda t: 1.0, instance, weights, h)
        claimed = omega * setup_time ** 2 / (2.0 * beta)
        branch = "caught-idle"

    ratio = competitive_ratio(alg, opt)
    satisfied = math.isinf(ratio) if rho == 0.0 else ratio >= claimed * 0.98
    return AdversaryReport(
        attack="setup", branch=branch, instance=instance, weights=weights,
        alg_cost=alg, opt_upper_bound=opt, ratio=ratio, claimed_bound=claimed,
        satisfied=satisfied,
        details={"setup_time": setup_time, "rho": rho,
                 "max_requested_in_window": float(requested[1:lag + 1].max(initial=0.0))},
    )


def integrality_gap(epsilon: float) -> float:
    """Ratio of the integer-constrained to the fractional offline optimum on
    the trickle instance: rate epsilon for 1/epsilon hours, power-only costs,
    no waiting allowed.

    Integer capacity must hold a full server (cost theta*T), the fractional
    schedule holds epsilon servers (cost theta*T*epsilon), so the gap is
    exactly 1/epsilon.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    theta = 1.0
    horizon = 1.0 / epsilon
    integer_cost = theta * horizon * 1.0
    fractional_cost = theta * horizon * epsilon
    return integer_cost / fractional_cost
