"""Closed-form layer vs. independent oracles: a fixed-point iteration
solver written here (independent of the library's direct elimination),
the exhaustive policy enumeration, and frozen hand-derived constants."""

import numpy as np
import pytest

from ruinbandit.analytics import (
    GapReport,
    RegionLabel,
    best_threshold,
    boundary,
    enumerate_policies,
    failure_ratio,
    gap_report,
    hitting_probabilities,
    optimal_by_enumeration,
    optimal_threshold,
    policy_value,
    value_threshold0,
    value_threshold1,
)
from ruinbandit.core import (
    Action,
    ModelParams,
    ParameterError,
    TablePolicy,
    ThresholdPolicy,
    policy_actions,
    uniform_q,
)

GRID = [i / 10 for i in range(1, 10)]


def iterate_values(policy, params, sweeps=200_000, tol=1e-15):
    """Independent oracle: solve the policy's fixed point by repeated
    substitution instead of direct elimination."""
    goal = params.goal
    acts = policy_actions(policy, goal)
    values = np.zeros(goal + 1)
    values[goal] = 1.0
    for _ in range(sweeps):
        delta = 0.0
        for s in range(1, goal):
            if acts[s - 1] is Action.FINISH:
                new = params.p_f
            else:
                new = params.p_c * values[s + 1] + params.p_d * values[s - 1]
            delta = max(delta, abs(new - values[s]))
            values[s] = new
        if delta < tol:
            break
    return values


class TestFailureRatio:
    def test_balanced(self):
        assert failure_ratio(ModelParams(4, 0.5, 0.3, uniform_q(4))) == 1.0

    def test_below_half(self):
        r = failure_ratio(ModelParams(4, 0.45, 0.3, uniform_q(4)))
        assert r == pytest.approx(11.0 / 9.0, abs=1e-15)

    def test_above_half(self):
        r = failure_ratio(ModelParams(4, 0.65, 0.3, uniform_q(4)))
        assert r == pytest.approx(7.0 / 13.0, abs=1e-15)


class TestClosedFormValues:
    def test_threshold1_boundary_states(self):
        params = ModelParams(5, 0.37, 0.42, uniform_q(5))
        assert value_threshold1(0, params) == 0.0
        assert value_threshold1(1, params) == params.p_f
        assert value_threshold1(5, params) == 1.0

    def test_threshold0_boundary_states(self):
        params = ModelParams(5, 0.37, 0.42, uniform_q(5))
        assert value_threshold0(0, params) == 0.0
        assert value_threshold0(5, params) == 1.0

    def test_threshold1_balanced_interior(self):
        # p_f + (1 - p_f)/3 at state 2 of 4 under a balanced walk.
        params = ModelParams(4, 0.5, 0.3, uniform_q(4))
        assert value_threshold1(2, params) == pytest.approx(0.3 + 0.7 / 3.0, abs=1e-15)

    def test_threshold0_balanced_is_state_over_goal(self):
        params = ModelParams(4, 0.5, 0.3, uniform_q(4))
        assert value_threshold0(2, params) == pytest.approx(0.5, abs=1e-15)

    def test_threshold0_unbalanced_frozen_value(self):
        # (1 - r) / (1 - r^4) at r = 7/13 is exactly 2197/4360.
        params = ModelParams(4, 0.65, 0.3, uniform_q(4))
        assert value_threshold0(1, params) == pytest.approx(2197.0 / 4360.0, abs=1e-14)

    @pytest.mark.parametrize("p_c", [0.2, 0.45, 0.5, 0.5 + 1e-6, 0.5 - 1e-6, 0.65, 0.9])
    @pytest.mark.parametrize("goal", [2, 3, 4, 8])
    def test_matches_linear_solve(self, p_c, goal):
        params = ModelParams(goal, p_c, 0.3, uniform_q(goal))
        for tau, closed in ((0, value_threshold0), (1, value_threshold1)):
            if tau > goal - 1:
                continue
            values, _ = policy_value(ThresholdPolicy(tau), params)
            for s in range(goal + 1):
                assert abs(values[s] - closed(s, params)) <= 1e-10

    def test_monotone_and_bounded(self):
        for p_c in GRID:
            for goal in (3, 5, 9):
                params = ModelParams(goal, p_c, 0.3, uniform_q(goal))
                for fn in (value_threshold0, value_threshold1):
                    values = [fn(s, params) for s in range(goal + 1)]
                    assert all(0.0 <= v <= 1.0 for v in values)
                    assert all(b >= a - 1e-14 for a, b in zip(values, values[1:]))

    def test_state_out_of_range_rejected(self):
        params = ModelParams(4, 0.5, 0.3, uniform_q(4))
        with pytest.raises(ParameterError):
            value_threshold0(5, params)


class TestPolicyValue:
    def test_always_finish_is_flat(self):
        params = ModelParams(5, 0.61, 0.23, uniform_q(5))
        values, scalar = policy_value(ThresholdPolicy(4), params)
        assert np.allclose(values[1:5], params.p_f, atol=1e-15)
        assert scalar == pytest.approx(params.p_f, abs=1e-15)

    def test_matches_fixed_point_iteration(self):
        # Cross-validates direct elimination against an independent solver.
        params = ModelParams(6, 0.58, 0.35, (0.1, 0.2, 0.3, 0.2, 0.2))
        for policy in (
            ThresholdPolicy(0),
            ThresholdPolicy(1),
            TablePolicy(
                (Action.CONTINUE, Action.FINISH, Action.CONTINUE, Action.FINISH, Action.CONTINUE)
            ),
        ):
            values, scalar = policy_value(policy, params)
            reference = iterate_values(policy, params)
            assert np.allclose(values, reference, atol=1e-12)
            assert scalar == pytest.approx(float(np.dot(params.q, reference[1:-1])), abs=1e-12)

    def test_incompatible_policy_rejected(self):
        params = ModelParams(4, 0.5, 0.3, uniform_q(4))
        with pytest.raises(ParameterError):
            policy_value(TablePolicy((Action.FINISH, Action.CONTINUE)), params)


class TestBoundary:
    def test_balanced_limit(self):
        assert boundary(0.5, 4) == 0.25

    def test_frozen_unbalanced_values(self):
        assert boundary(0.45, 4) == pytest.approx(0.18044554455445544, abs=1e-14)
        assert boundary(0.65, 4) == pytest.approx(2197.0 / 4360.0, abs=1e-14)

    def test_equals_walk_value_from_state_one(self):
        for p_c in GRID:
            for goal in (2, 3, 4, 7, 12):
                params = ModelParams(goal, p_c, 0.3, uniform_q(goal))
                assert boundary(p_c, goal) == pytest.approx(
                    value_threshold0(1, params), abs=1e-14
                )

    @pytest.mark.parametrize("goal", [3, 4, 8])
    def test_continuity_at_balance(self, goal):
        assert abs(boundary(0.5 + 1e-6, goal) - 1.0 / goal) <= 1e-4
        assert abs(boundary(0.5 - 1e-6, goal) - 1.0 / goal) <= 1e-4

    def test_endpoint_limits(self):
        assert boundary(0.0, 4) == 0.0
        assert boundary(1.0, 4) == 1.0


class TestOptimalThreshold:
    def test_no_exploration_instance(self):
        tau, region = optimal_threshold(ModelParams(4, 0.45, 0.3, uniform_q(4)))
        assert tau == 1 and region is RegionLabel.NO_EXPLORATION

    def test_exploration_instance(self):
        tau, region = optimal_threshold(ModelParams(4, 0.65, 0.3, uniform_q(4)))
        assert tau == 0 and region is RegionLabel.EXPLORATION

    def test_tie_favors_finishing(self):
        tau, region = optimal_threshold(ModelParams(4, 0.5, 0.25, uniform_q(4)))
        assert tau == 1 and region is RegionLabel.NO_EXPLORATION

    def test_rule_matches_scalar_argmax_on_grid(self):
        for p_c in GRID:
            for p_f in GRID:
                params = ModelParams(4, p_c, p_f, uniform_q(4))
                tau, _ = optimal_threshold(params)
                _, v0 = policy_value(ThresholdPolicy(0), params)
                _, v1 = policy_value(ThresholdPolicy(1), params)
                if abs(v1 - v0) > 1e-10:
                    assert tau == (1 if v1 > v0 else 0)

    def test_bellman_residual_of_optimal_values(self):
        for p_c in GRID:
            for p_f in (0.2, 0.5, 0.8):
                for goal in (3, 4, 6):
                    params = ModelParams(goal, p_c, p_f, uniform_q(goal))
                    tau, _ = optimal_threshold(params)
                    values, _ = policy_value(ThresholdPolicy(tau), params)
                    for s in range(1, goal):
                        best = max(
                            params.p_f,
                            params.p_c * values[s + 1] + params.p_d * values[s - 1],
                        )
                        assert abs(values[s] - best) <= 1e-10


class TestBestThresholdEdgeCases:
    def test_balanced_tie_is_one(self):
        assert best_threshold(0.25, 0.5, 4) == 1

    def test_estimate_extremes(self):
        # p_c = 0 drives the boundary to its 0 limit, so any jump-success
        # estimate wins; p_c = 1 drives it to 1, so only p_f = 1 ties.
        assert best_threshold(0.0, 0.0, 4) == 1
        assert best_threshold(0.7, 1.0, 4) == 0
        assert best_threshold(1.0, 1.0, 4) == 1

    def test_matches_optimal_threshold_on_grid(self):
        for p_c in GRID:
            for p_f in GRID:
                for goal in (2, 3, 4, 8):
                    params = ModelParams(goal, p_c, p_f, uniform_q(goal))
                    assert best_threshold(p_f, p_c, goal) == optimal_threshold(params)[0]


class TestGapReport:
    def test_balanced_max_gap(self):
        report = gap_report(ModelParams(4, 0.5, 0.3, uniform_q(4)))
        assert report.delta_max == pytest.approx(0.05, abs=1e-14)

    def test_weights_start_at_one_and_decrease(self):
        report = gap_report(ModelParams(4, 0.45, 0.3, uniform_q(4)))
        assert report.delta_s[0] == pytest.approx(report.delta_max, abs=1e-14)
        assert all(b < a for a, b in zip(report.delta_s, report.delta_s[1:]))
        assert all(d >= 0.0 for d in report.delta_s)

    def test_gaps_match_value_difference(self):
        for p_c in (0.3, 0.5, 0.7):
            for p_f in (0.2, 0.6):
                params = ModelParams(5, p_c, p_f, uniform_q(5))
                report = gap_report(params)
                for s in range(1, 5):
                    direct = abs(value_threshold1(s, params) - value_threshold0(s, params))
                    assert report.delta_s[s - 1] == pytest.approx(direct, abs=1e-12)
                assert report.delta_max == pytest.approx(
                    abs(value_threshold1(1, params) - value_threshold0(1, params)), abs=1e-12
                )

    def test_boundary_distance_properties(self):
        params = ModelParams(4, 0.45, 0.3, uniform_q(4))
        report = gap_report(params)
        vertical = abs(params.p_f - boundary(params.p_c, 4))
        assert vertical == pytest.approx(0.11955445544554458, abs=1e-14)
        assert 0.0 < report.delta_boundary <= vertical

    def test_boundary_distance_zero_on_curve(self):
        p_c = 0.62
        params = ModelParams(4, p_c, boundary(p_c, 4), uniform_q(4))
        assert gap_report(params).delta_boundary <= 1e-6

    def test_report_type(self):
        assert isinstance(gap_report(ModelParams(4, 0.5, 0.3, uniform_q(4))), GapReport)


class TestHittingProbabilities:
    def test_uniform_balanced(self):
        p_cont, p_fin = hitting_probabilities(ModelParams(4, 0.5, 0.3, uniform_q(4)))
        assert p_cont == pytest.approx(2.0 / 3.0, abs=1e-15)
        assert p_fin == pytest.approx(2.0 / 3.0, abs=1e-14)

    def test_continue_prob_is_one_minus_first_weight(self):
        p_cont, _ = hitting_probabilities(ModelParams(4, 0.5, 0.3, (0.25, 0.5, 0.25)))
        assert p_cont == pytest.approx(0.75, abs=1e-15)

    def test_start_at_top_with_strong_updrift(self):
        # Starting next to the goal with a near-sure up-move, the jump is
        # almost never reached.
        params = ModelParams(4, 0.99, 0.3, (0.0, 0.0, 1.0))
        _, p_fin = hitting_probabilities(params)
        assert p_fin < 0.015


class TestEnumeration:
    @pytest.mark.parametrize("goal, count", [(2, 2), (4, 8), (5, 16)])
    def test_policy_counts(self, goal, count):
        policies = enumerate_policies(goal)
        assert len(policies) == count
        assert len(set(policies)) == count
        for policy in policies:
            assert len(policy.actions) == goal - 1

    def test_guard(self):
        with pytest.raises(ParameterError, match="guard"):
            enumerate_policies(17)

    def test_enumeration_matches_threshold_rule_at_benchmarks(self):
        for p_c, tau in ((0.45, 1), (0.65, 0)):
            params = ModelParams(4, p_c, 0.3, uniform_q(4))
            _, best_value = optimal_by_enumeration(params)
            _, rule_value = policy_value(ThresholdPolicy(tau), params)
            assert abs(best_value - rule_value) <= 1e-10

    def test_tie_broken_toward_threshold_with_more_jumps(self):
        # At p_f exactly on the boundary the two candidates tie; the
        # enumeration prefers the threshold-1 table.
        params = ModelParams(4, 0.5, 0.25, uniform_q(4))
        best_policy, _ = optimal_by_enumeration(params)
        assert best_policy.actions == (Action.FINISH, Action.CONTINUE, Action.CONTINUE)
