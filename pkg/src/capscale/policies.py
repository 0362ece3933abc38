"""Online capacity-scaling controllers.

Five controllers are exposed as policies for the simulator:

  BalancedScaling          (bcs)        dm/dt = (r1*omega*q - r2*theta*m)/beta
  AdaptToPrediction        (ap)         offline schedule on the prediction plus
                                        a pulse-shaped online correction
  AdaptiveBalancedScaling  (abcs)       balanced scaling with state-dependent
                                        rates gated against the advised state
  IdleTimeoutTimer         (timer)      match arrivals, retire capacity idle
                                        longer than tau
  NoWaitBalancedScaling    (nowait_bcs) no-wait mode: match arrivals, decay at
                                        rate theta/beta otherwise

A policy carries immutable configuration plus per-rollout private state
created in reset(); concurrent rollouts must use separate instances.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import CostWeights, Trajectory
from .workload import ArrivalFunction


@dataclass(frozen=True)
class ABCSParams:
    """Reaction rates of the adaptive controller: slow pair (r1, r2) and fast
    pair (R1, R2), with R1 >= r1 >= 0 and R2 >= r2 >= 0."""

    r1: float
    r2: float
    R1: float
    R2: float

    def __post_init__(self):
        for name, v in (("r1", self.r1), ("r2", self.r2), ("R1", self.R1), ("R2", self.R2)):
            if v < 0 or not math.isfinite(v):
                raise ValueError(f"{name} must be nonnegative and finite, got {v}")

    @property
    def ordering_ok(self) -> bool:
        return self.R1 >= self.r1 and self.R2 >= self.r2

    @property
    def all_positive(self) -> bool:
        return min(self.r1, self.r2, self.R1, self.R2) > 0


def balanced_derivative(q: float, m: float, weights: CostWeights,
                        r1: float, r2: float) -> float:
    """Capacity growth rate that balances flow-time against switching+power:
    (r1*omega*q - r2*theta*m)/beta."""
    if weights.beta == 0:
        raise ValueError("beta must be nonzero")
    return (r1 * weights.omega * q - r2 * weights.theta * m) / weights.beta


def gated_rates(q, m, q_adv, m_adv, weights: CostWeights, params: ABCSParams):
    """State-dependent rate selection against the advised state.

    Returns (r1_hat, r2_hat): the slow ramp-up rate r1 once the controller is
    sufficiently ahead of the advice, the fast ramp-down rate R2 only when it
    is over-provisioned on both coordinates. Vectorizes over numpy arrays.
    """
    excess_q = np.maximum(np.asarray(q) - q_adv, 0.0)
    ahead = (np.asarray(m) - m_adv) > excess_q * math.sqrt(weights.omega / (2.0 * weights.beta))
    r1_hat = np.where(ahead, params.r1, params.R1)
    over = (np.asarray(m) > m_adv) & (np.asarray(q) <= q_adv)
    r2_hat = np.where(over, params.R2, params.r2)
    if np.isscalar(q) or np.ndim(q) == 0:
        return float(r1_hat), float(r2_hat)
    return r1_hat, r2_hat


def _balanced_next_m(q: float, m: float, weights: CostWeights,
                     r1: float, r2: float, h: float) -> float:
    # Shared by BalancedScaling and AdaptiveBalancedScaling so that equal rate
    # values produce bitwise-identical rollouts.
    return m + h * ((r1 * weights.omega * q - r2 * weights.theta * m) / weights.beta)


class Policy:
    """Base controller interface consumed by dynamics.simulate."""

    name = "policy"

    def reset(self, weights: CostWeights, h: float) -> None:
        self._weights = weights
        self._h = h

    def next_m(self, t: float, m: float, q: float, lam: float) -> float:
        """Capacity at t + h given the state at t and the observed rate lam(t)."""
        raise NotImplementedError


class BalancedScaling(Policy):
    """Memoryless controller integrating balanced_derivative."""

    name = "bcs"

    def __init__(self, r1: float = 2.0, r2: float = 1.0):
        if r1 < 0 or r2 < 0:
            raise ValueError(f"rates must be nonnegative, got r1={r1} r2={r2}")
        self.r1 = float(r1)
        self.r2 = float(r2)

    def next_m(self, t, m, q, lam):
        return _balanced_next_m(q, m, self._weights, self.r1, self.r2, self._h)


class FixedSchedule(Policy):
    """Follows a prescribed capacity function of time; used for offline
    schedules and adversarial reference solutions."""

    name = "schedule"

    def __init__(self, schedule: Callable[[float], float]):
        self.schedule = schedule

    def next_m(self, t, m, q, lam):
        return self.schedule(t + self._h)


class AdaptToPrediction(Policy):
    """Offline schedule on the prediction plus a pulse-shaped online correction.

    The offline component is the LP-optimal schedule for the predicted rate.
    When the observed rate exceeds the prediction, the online component adds
    sqrt(omega/(2 beta)) servers per excess work unit and releases them after
    sqrt(2 beta / omega) hours, so it always equals the gain-scaled trailing
    window volume of the excess rate.
    """

    name = "ap"

    def __init__(self, prediction: ArrivalFunction, lp_delta: float | None = None):
        self.prediction = prediction
        self.lp_delta = float(lp_delta) if lp_delta is not None else prediction.delta
        self._offline_cache: dict = {}

    def offline_schedule(self, weights: CostWeights):
        """LP-optimal capacity for the prediction under these weights."""
        from . import offline

        key = (weights.omega, weights.beta, weights.theta, weights.no_wait, self.lp_delta)
        if key not in self._offline_cache:
            solution = offline.solve(self.prediction, weights, self.lp_delta)
            self._offline_cache[key] = (solution, offline.lp_schedule(solution))
        return self._offline_cache[key]

    @property
    def pulse_gain(self) -> float:
        return math.sqrt(self._weights.omega / (2.0 * self._weights.beta))

    @property
    def pulse_width(self) -> float:
        return math.sqrt(2.0 * self._weights.beta / self._weights.omega)

    def reset(self, weights, h):
        super().reset(weights, h)
        self.solution, self._m1 = self.offline_schedule(weights)
        self._window_steps = max(1, round(self.pulse_width / h))
        self._excess_history = [0.0]
        self._m2 = 0.0

    def next_m(self, t, m, q, lam):
        excess = max(lam - self.prediction.rate_at(t), 0.0)
        self._excess_history.append(excess)
        k = len(self._excess_history) - 1
        lagged = self._excess_history[k - self._window_steps] if k >= self._window_steps else 0.0
        self._m2 = max(self._m2 + self._h * self.pulse_gain * (excess - lagged), 0.0)
        return self._m1(t + self._h) + self._m2

    @property
    def online_component(self) -> float:
        return self._m2


class AdaptiveBalancedScaling(Policy):
    """Balanced scaling whose rates are gated against an advised trajectory.

    The advised capacity/workload pair is produced by an embedded
    AdaptToPrediction controller simulated in lockstep on the same grid and
    clock, and is exposed after a rollout for diagnostics. With R1 = r1 and
    R2 = r2 the gates are inert and the rollout is bitwise identical to
    BalancedScaling(r1, r2).

    The ramp-rate gate switches on the surface m = m_adv + [q - q_adv]^+ *
    sqrt(omega/(2 beta)). A plain Euler step is wrong there in a way that
    does not vanish with h: completing a full step at the near-side rate
    overshoots the surface, and where the surface is attractive the overshoot
    chatter is charged as switching cost at a rate independent of h. A step
    that reaches the surface is therefore split at the crossing: the
    remainder runs at the far-side rate, or rides the surface when that rate
    pushes back. First-order accurate, like the simulator's q = 0 clamp.
    """

    name = "abcs"

    def __init__(self, prediction: ArrivalFunction, params: ABCSParams,
                 lp_delta: float | None = None):
        self.params = params
        self.advisor = AdaptToPrediction(prediction, lp_delta)
        self._adv_m: list[float] = []
        self._adv_q: list[float] = []

    def reset(self, weights, h):
        super().reset(weights, h)
        self.advisor.reset(weights, h)
        self._adv_m = [0.0]
        self._adv_q = [0.0]

    def next_m(self, t, m, q, lam):
        w, h, p = self._weights, self._h, self.params
        m_adv, q_adv = self._adv_m[-1], self._adv_q[-1]
        r1_hat, r2_hat = gated_rates(q, m, q_adv, m_adv, w, p)
        m_raw = _balanced_next_m(q, m, w, r1_hat, r2_hat, h)
        m_adv_next = max(self.advisor.next_m(t, m_adv, q_adv, lam), 0.0)
        q_adv_next = max(q_adv + h * (lam - m_adv), 0.0)
        self._adv_m.append(m_adv_next)
        self._adv_q.append(q_adv_next)
        if p.R1 == p.r1:
            return m_raw
        gain = math.sqrt(w.omega / (2.0 * w.beta))
        boundary_now = m_adv + max(q - q_adv, 0.0) * gain
        q_next = max(q + h * (lam - m), 0.0)
        boundary_next = m_adv_next + max(q_next - q_adv_next, 0.0) * gain
        below = m <= boundary_now  # fast-ramp side of the gate
        if (below and m_raw <= boundary_next) or (not below and m_raw >= boundary_next):
            return m_raw
        rate_now = (m_raw - m) / h
        surface_rate = (boundary_next - boundary_now) / h
        denom = rate_now - surface_rate
        alpha = 1.0 if denom == 0 else min(max((boundary_now - m) / (h * denom), 0.0), 1.0)
        cross_point = boundary_now + alpha * h * surface_rate
        other = p.r1 if below else p.R1
        rate_other = (other * w.omega * q - r2_hat * w.theta * m) / w.beta
        continued = cross_point + (1.0 - alpha) * h * rate_other
        if below:
            return max(boundary_next, continued)
        return max(min(boundary_next, continued), 0.0)

    def advised_trajectory(self, traj: Trajectory) -> Trajectory:
        """The lockstep advised rollout aligned with a simulated trajectory."""
        if len(self._adv_m) != len(traj.t):
            raise ValueError("advised state does not match the trajectory grid")
        return Trajectory(h=traj.h, t=traj.t, lam=traj.lam,
                          m=np.asarray(self._adv_m), q=np.asarray(self._adv_q))


class IdleTimeoutTimer(Policy):
    """Match arrivals instantly; retire capacity that has idled for tau hours.

    Fluid capacity is tracked as a stack of layers. Work packs onto the most
    recently activated capacity, so idle time accrues on the earliest-activated
    surplus, which expires first. Idleness is measured at grid resolution and
    any queued work keeps every layer busy.
    """

    name = "timer"

    def __init__(self, tau: float | None = None):
        if tau is not None and tau <= 0:
            raise ValueError(f"tau must be positive, got {tau}")
        self.tau = tau

    def reset(self, weights, h):
        super().reset(weights, h)
        if self.tau is not None:
            self._tau = self.tau
        elif weights.theta > 0:
            self._tau = weights.beta / weights.theta
        else:
            raise ValueError("tau is required when theta = 0")
        self._layers: list[list] = []  # [amount, idle_since or None], bottom to top

    def next_m(self, t, m, q, lam):
        layers = [L for L in self._layers
                  if L[1] is None or t - L[1] < self._tau - 1e-12]
        total = sum(L[0] for L in layers)
        if lam > total:
            layers.append([lam - total, None])
            total = lam
        busy = total if q > 1e-12 else min(lam, total)
        rebuilt: list[list] = []  # built top to bottom, then reversed
        remaining = busy
        for amount, idle_since in reversed(layers):
            take = min(remaining, amount)
            remaining -= take
            if take > 0:
                rebuilt.append([take, None])
            if amount - take > 1e-15 * max(1.0, total):
                rebuilt.append([amount - take, t if idle_since is None else idle_since])
        rebuilt.reverse()
        merged: list[list] = []
        for layer in rebuilt:
            if merged and merged[-1][1] == layer[1]:
                merged[-1][0] += layer[0]
            else:
                merged.append(layer)
        self._layers = merged
        return total


class NoWaitBalancedScaling(Policy):
    """No-wait controller: capacity matches the arrival rate from below and
    decays exponentially at rate theta/beta when above it. Only valid with
    no-wait cost weights (the simulator enforces the matching jumps)."""

    name = "nowait_bcs"

    def reset(self, weights, h):
        if not weights.no_wait:
            raise ValueError("NoWaitBalancedScaling requires no-wait cost weights")
        super().reset(weights, h)
        self._decay = math.exp(-weights.theta * h / weights.beta)

    def next_m(self, t, m, q, lam):
        return m * self._decay


_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\{([^}]*)\}\s*$")

POLICY_NAMES = ("bcs", "ap", "abcs", "timer", "nowait_bcs")


def confidence_params(r: float) -> ABCSParams:
    """Map a prediction-confidence level r to adaptive-controller rates.

    r = 1 disables the advice gates entirely (rates (2, 1, 2, 1), the tuned
    purely-online setting). For r >= 1.1 the map is R1 = 8r(r-1), r1 = 1/r,
    R2 = 2r, r2 = 1/r; note R1 < r1 for r < 1.25, which downstream guarantee
    computations flag rather than reject.
    """
    if r == 1:
        return ABCSParams(2.0, 1.0, 2.0, 1.0)
    if r < 1.1:
        raise ValueError(f"confidence must be 1 or >= 1.1, got {r}")
    return ABCSParams(r1=1.0 / r, r2=1.0 / r, R1=8.0 * r * (r - 1.0), R2=2.0 * r)


def parse_policy_spec(spec: str):
    """Parse 'name{v1,v2,...}' into (name, [floats])."""
    match = _SPEC_RE.match(spec)
    if not match:
        raise ValueError(f"bad policy spec {spec!r}, expected name{{args}}")
    name, raw = match.group(1), match.group(2).strip()
    args = [float(v) for v in raw.split(",")] if raw else []
    if name not in POLICY_NAMES:
        raise ValueError(f"unknown policy {name!r}, expected one of {POLICY_NAMES}")
    return name, args


def build_policy(spec: str, prediction: ArrivalFunction | None = None,
                 lp_delta: float | None = None) -> Policy:
    """Instantiate a policy from its CLI spec string.

    bcs{r1,r2} | ap{} | abcs{r} | abcs{r1,r2,R1,R2} | timer{tau} | timer{} |
    nowait_bcs{}. Prediction-driven policies require a prediction.
    """
    name, args = parse_policy_spec(spec)
    if name == "bcs":
        return BalancedScaling(*args) if args else BalancedScaling()
    if name == "timer":
        return IdleTimeoutTimer(args[0]) if args else IdleTimeoutTimer()
    if name == "nowait_bcs":
        return NoWaitBalancedScaling()
    if prediction is None:
        raise ValueError(f"policy {name!r} needs a prediction")
    if name == "ap":
        return AdaptToPrediction(prediction, lp_delta)
    if len(args) == 1:
        params = confidence_params(args[0])
    elif len(args) == 4:
        params = ABCSParams(*args)
    else:
        raise ValueError("abcs takes either {r} or {r1,r2,R1,R2}")
    return AdaptiveBalancedScaling(prediction, params, lp_delta)
