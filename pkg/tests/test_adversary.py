import math

import pytest

from capscale import (AdaptiveBalancedScaling, AdaptToPrediction,
                      BalancedScaling, FixedSchedule, IdleTimeoutTimer,
                      confidence_params, consistency_tradeoff, cost,
                      integrality_gap, online_lower_bound,
                      setup_time_lower_bound, simulate, timer_lower_bound)


def bcs_factory(prediction):
    return BalancedScaling(2, 1)


def zero_factory(prediction):
    return FixedSchedule(lambda t: 0.0)


class TestOnlineLowerBound:
    def test_vs_balanced_scaling(self):
        report = online_lower_bound(bcs_factory)
        assert report.branch == "threshold-crossed"
        assert report.ratio >= 2.49
        assert report.satisfied
        # the reference cost is realized by the do-nothing schedule: tau^2/2
        tau = report.details["tau"]
        assert report.opt_upper_bound == pytest.approx(tau ** 2 / 2.0, rel=1e-9)

    def test_vs_do_nothing_policy(self):
        report = online_lower_bound(zero_factory)
        assert report.branch == "never-crossed"
        # flow of a fully unserved unit-rate stream dominates: ~ T^2/2 over ~1
        assert report.ratio >= 4.4

    def test_vs_instant_oracle(self):
        report = online_lower_bound(lambda pred: FixedSchedule(lambda t: 1.0))
        assert report.branch == "threshold-crossed"
        assert report.ratio > 100.0  # vanishing optimum at a tiny tau

    @pytest.mark.parametrize("name,factory", [
        ("bcs", bcs_factory),
        ("abcs-r1", lambda p: AdaptiveBalancedScaling(p, confidence_params(1))),
        ("abcs-r3", lambda p: AdaptiveBalancedScaling(p, confidence_params(3))),
        ("abcs-r5", lambda p: AdaptiveBalancedScaling(p, confidence_params(5))),
        ("timer", lambda p: IdleTimeoutTimer(1.0)),
        ("ap", lambda p: AdaptToPrediction(p)),
    ])
    def test_every_shipped_policy_pays(self, name, factory):
        assert online_lower_bound(factory).ratio >= 2.49

    def test_deterministic(self):
        a = online_lower_bound(bcs_factory)
        b = online_lower_bound(bcs_factory)
        assert a.ratio == b.ratio and a.alg_cost == b.alg_cost


class TestTimerLowerBound:
    def test_reference_parameters(self):
        report = timer_lower_bound(1.0, 100.0, 0.01)
        assert report.branch == "burst-train"
        assert report.ratio >= 10.0
        assert report.ratio >= report.claimed_bound * 0.98
        assert report.satisfied

    def test_ratio_grows_with_horizon(self):
        ratios = [timer_lower_bound(1.0, float(T), 0.01).ratio for T in (10, 100, 1000)]
        assert ratios[0] < ratios[1] < ratios[2]

    def test_never_activating_policy(self):
        report = timer_lower_bound(1.0, 50.0, 0.01,
                                   policy_factory=lambda _: FixedSchedule(lambda t: 0.0))
        assert report.branch == "never-activates"
        w = report.weights
        # flow of the unserved rate-2 stream against the always-on pair
        assert report.alg_cost >= w.omega * 50.0 ** 2 / 2.0
        assert report.opt_upper_bound <= 2 * w.beta + 2 * w.theta * 50.0 + 1.0
        assert report.ratio > 20.0

    def test_validation(self):
        with pytest.raises(ValueError):
            timer_lower_bound(1.0, 100.0, 1.5)
        with pytest.raises(ValueError):
            timer_lower_bound(1.0, 100.0, 0.013)

    def test_instance_shape(self):
        report = timer_lower_bound(1.0, 10.0, 0.1)
        lam = report.instance
        t0 = report.details["t0"]
        k0 = round(t0 / lam.delta)
        assert all(r == 2.0 for r in lam.rates[:k0])
        tail = lam.rates[k0:]
        assert all(tail[i] == (1.0 if i % 10 == 0 else 0.0) for i in range(len(tail)))


class TestConsistencyTradeoff:
    @pytest.mark.parametrize("slack", [0.1, 0.25])
    def test_underprovisioning_policy_loses_consistency(self, slack):
        report = consistency_tradeoff(bcs_factory, slack)
        assert report.branch == "consistency"
        assert report.ratio > 1.0 + slack
        assert report.satisfied

    @pytest.mark.parametrize("slack", [0.1, 0.25])
    def test_preprovisioning_policy_pays_robustness(self, slack):
        report = consistency_tradeoff(lambda p: FixedSchedule(lambda t: 2.0), slack)
        assert report.branch == "robustness"
        assert report.ratio >= (1.0 / (4.0 * slack)) * 0.98
        assert report.satisfied
        # reference schedule cost matches the trickle construction
        assert report.opt_upper_bound <= 4.0 * slack + 0.01
        assert report.opt_upper_bound >= 4.0 * slack - 2.0 * slack ** 2 - 0.01

    def test_zero_policy_loses_consistency(self):
        report = consistency_tradeoff(zero_factory, 0.1)
        assert report.branch == "consistency" and report.satisfied

    def test_prediction_gap_of_branch_two(self):
        report = consistency_tradeoff(lambda p: FixedSchedule(lambda t: 2.0), 0.25)
        assert report.details["prediction_work_gap"] == pytest.approx(4.0, abs=0.01)

    def test_rejects_nonpositive_slack(self):
        with pytest.raises(ValueError):
            consistency_tradeoff(bcs_factory, 0.0)


class TestSetupTimeLowerBound:
    def test_idle_policy_pays_quadratic(self):
        report = setup_time_lower_bound(bcs_factory, 2.0)
        assert report.branch == "caught-idle"
        assert report.claimed_bound == pytest.approx(2.0)
        assert report.ratio == pytest.approx(2.0, abs=1e-6)
        assert report.satisfied

    def test_preprovisioning_policy_unbounded(self):
        report = setup_time_lower_bound(lambda p: FixedSchedule(lambda t: 1.0), 2.0)
        assert report.branch == "pre-provisioned"
        assert math.isinf(report.ratio)
        assert report.opt_upper_bound == 0.0
        assert report.satisfied

    def test_bound_vanishes_with_setup_time(self):
        small = setup_time_lower_bound(bcs_factory, 0.05)
        assert small.claimed_bound == pytest.approx(0.05 ** 2 / 2.0)

    def test_rejects_nonpositive_setup(self):
        with pytest.raises(ValueError):
            setup_time_lower_bound(bcs_factory, 0.0)


class TestIntegralityGap:
    def test_reference_values_exact(self):
        assert integrality_gap(0.1) == 10.0
        assert integrality_gap(0.05) == 20.0

    def test_gap_closes(self):
        assert integrality_gap(0.999) == pytest.approx(1.0, rel=1e-2)

    def test_domain(self):
        with pytest.raises(ValueError):
            integrality_gap(0.0)
        with pytest.raises(ValueError):
            integrality_gap(1.0)


class TestReportContract:
    def test_reference_cost_is_resimulatable(self):
        # The reported upper bound must be the measured cost of an explicit
        # schedule, so rebuilding it from the report reproduces the number.
        report = online_lower_bound(bcs_factory)
        ref = simulate(FixedSchedule(lambda t: 0.0), report.instance,
                       report.weights, 1e-3)
        assert cost(ref, report.weights).total == pytest.approx(
            report.opt_upper_bound, rel=1e-6)

    def test_json_payload(self):
        payload = online_lower_bound(bcs_factory).to_json()
        assert '"attack": "online"' in payload
        assert '"satisfied": true' in payload
