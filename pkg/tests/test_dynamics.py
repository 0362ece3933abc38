import math

import numpy as np
import pytest

from capscale import (ArrivalFunction, BalancedScaling, CostWeights,
                      FixedSchedule, competitive_ratio, cost, cost_increments,
                      make_constant, make_sinusoid, simulate)


class TestWeights:
    def test_validation(self):
        with pytest.raises(ValueError):
            CostWeights(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            CostWeights(1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            CostWeights(1.0, 1.0, -1.0)
        # omega is unconstrained in no-wait mode (it is conceptually infinite)
        CostWeights(0.0, 1.0, 1.0, no_wait=True)
        CostWeights(math.inf, 1.0, 1.0, no_wait=True)


class TestSimulate:
    def test_zero_workload_is_absorbing(self, unit_weights):
        lam = make_constant(0.0, 2.0, 0.5)
        traj = simulate(BalancedScaling(2, 1), lam, unit_weights, 0.05)
        assert np.all(traj.m == 0.0) and np.all(traj.q == 0.0)
        assert cost(traj, unit_weights).total == 0.0

    def test_matched_capacity_costs_switch_plus_power(self, unit_weights):
        # Capacity 1 from the first instant onward: no queue beyond the
        # one-step activation lag, so the cost is beta + theta*T + O(h).
        lam = make_constant(1.0, 1.0, 1.0)
        h = 1e-3
        traj = simulate(FixedSchedule(lambda t: 1.0), lam, unit_weights, h)
        breakdown = cost(traj, unit_weights)
        assert breakdown.switching == pytest.approx(1.0)
        assert breakdown.power == pytest.approx(1.0, abs=2 * h)
        assert breakdown.flow_time <= 2 * h
        assert breakdown.total == pytest.approx(2.0, abs=5 * h)

    def test_unserved_queue_flow_time_closed_form(self):
        # q(t) = t exactly on the grid, so the trapezoid equals T^2/2 = 2.
        w = CostWeights(1.0, 1.0, 0.0)
        lam = make_constant(1.0, 2.0, 2.0)
        traj = simulate(FixedSchedule(lambda t: 0.0), lam, w, 0.01)
        breakdown = cost(traj, w)
        assert breakdown.flow_time == pytest.approx(2.0, rel=1e-12)
        assert breakdown.total == pytest.approx(2.0, rel=1e-12)

    def test_queue_recurrence_exact(self, unit_weights):
        lam = ArrivalFunction(1.0, (3.0, 0.0, 2.0))
        h = 0.25
        traj = simulate(BalancedScaling(2, 1), lam, unit_weights, h)
        for k in range(len(traj.t) - 1):
            expected = max(traj.q[k] + h * (traj.lam[k] - traj.m[k]), 0.0)
            assert traj.q[k + 1] == expected

    def test_state_stays_nonnegative(self, unit_weights):
        lam = make_sinusoid(10, 10, 4, 12, 0.5)
        traj = simulate(BalancedScaling(5, 3), lam, unit_weights, 0.025)
        assert traj.m.min() >= 0.0 and traj.q.min() >= 0.0
        assert traj.m[0] == 0.0 and traj.q[0] == 0.0

    def test_step_validation(self, unit_weights):
        lam = make_constant(1.0, 2.0, 0.5)
        with pytest.raises(ValueError):
            simulate(BalancedScaling(), lam, unit_weights, 0.7)  # h > delta
        with pytest.raises(ValueError):
            simulate(BalancedScaling(), lam, unit_weights, 0.3)  # delta % h != 0
        simulate(BalancedScaling(), lam, unit_weights, 0.5)  # h == delta is fine

    def test_non_finite_policy_rejected(self, unit_weights):
        lam = make_constant(1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            simulate(FixedSchedule(lambda t: math.nan), lam, unit_weights, 0.5)

    def test_no_wait_mode(self):
        w = CostWeights(0.0, 1.0, 1.0, no_wait=True)
        lam = ArrivalFunction(1.0, (2.0, 5.0, 1.0))
        traj = simulate(FixedSchedule(lambda t: 0.0), lam, w, 0.25)
        assert np.all(traj.q == 0.0)
        assert np.all(traj.m[1:] >= traj.lam[1:])
        breakdown = cost(traj, w)
        assert breakdown.flow_time == 0.0
        assert breakdown.switching > 0.0

    def test_scale_equivariance(self, unit_weights):
        lam = make_sinusoid(10, 5, 6, 12, 1)
        schedule = lambda t: 8.0 if t > 3 else 2.0
        base = cost(simulate(FixedSchedule(schedule), lam, unit_weights, 0.05), unit_weights)
        s = 3.5
        scaled_lam = ArrivalFunction(lam.delta, tuple(s * r for r in lam.rates))
        scaled = cost(simulate(FixedSchedule(lambda t: s * schedule(t)), scaled_lam,
                               unit_weights, 0.05), unit_weights)
        assert scaled.flow_time == pytest.approx(s * base.flow_time, rel=1e-12)
        assert scaled.switching == pytest.approx(s * base.switching, rel=1e-12)
        assert scaled.power == pytest.approx(s * base.power, rel=1e-12)

    def test_refinement_stability(self, unit_weights):
        lam = make_sinusoid(10, 8, 6, 12, 0.5)
        h = 0.05
        totals = [cost(simulate(BalancedScaling(2, 1), lam, unit_weights, step),
                       unit_weights).total for step in (h, h / 2, h / 4)]
        assert abs(totals[0] - totals[1]) <= 60.0 * h  # ~2x margin on |dcost/dh|
        assert abs(totals[1] - totals[2]) <= 0.75 * abs(totals[0] - totals[1])


class TestCost:
    def test_zero_trajectory(self, unit_weights):
        lam = make_constant(0.0, 1.0, 1.0)
        traj = simulate(FixedSchedule(lambda t: 0.0), lam, unit_weights, 0.5)
        breakdown = cost(traj, unit_weights)
        assert (breakdown.flow_time, breakdown.switching, breakdown.power,
                breakdown.total) == (0.0, 0.0, 0.0, 0.0)

    def test_switching_counts_positive_increments_only(self, unit_weights):
        lam = make_constant(0.0, 4.0, 1.0)
        up_down_up = lambda t: 1.0 if t <= 1 or t > 3 else 0.0
        traj = simulate(FixedSchedule(up_down_up), lam, unit_weights, 0.25)
        assert cost(traj, unit_weights).switching == pytest.approx(2.0)

    def test_total_is_component_sum(self, dc_weights):
        lam = make_sinusoid(100, 50, 6, 12, 1)
        traj = simulate(BalancedScaling(2, 1), lam, dc_weights, 0.05)
        b = cost(traj, dc_weights)
        assert b.total == b.flow_time + b.switching + b.power

    def test_increments_sum_to_total(self, dc_weights):
        lam = make_sinusoid(100, 50, 6, 12, 1)
        traj = simulate(BalancedScaling(2, 1), lam, dc_weights, 0.05)
        assert cost_increments(traj, dc_weights).sum() == pytest.approx(
            cost(traj, dc_weights).total, rel=1e-12)

    def test_csv_export(self, unit_weights, tmp_path):
        lam = make_constant(1.0, 1.0, 0.5)
        traj = simulate(BalancedScaling(), lam, unit_weights, 0.25)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,lambda,m,q"
        assert len(lines) == len(traj.t) + 1


class TestCompetitiveRatio:
    def test_plain_ratio(self):
        assert competitive_ratio(10.0, 5.0) == 2.0

    def test_vacuous_instance(self):
        assert competitive_ratio(0.0, 0.0) == 1.0

    def test_infinite_by_convention(self):
        assert competitive_ratio(1.0, 0.0) == math.inf

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            competitive_ratio(-1.0, 1.0)
        with pytest.raises(ValueError):
            competitive_ratio(1.0, -1.0)
