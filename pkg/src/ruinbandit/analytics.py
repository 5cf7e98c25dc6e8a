"""Closed-form solution layer: policy values, the optimal threshold, the
explore/no-explore boundary, suboptimality gaps, and a brute-force policy
enumeration that independently verifies the threshold form.

Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Action,
    ModelParams,
    ParameterError,
    Policy,
    TablePolicy,
    policy_actions,
)

__all__ = [
    "RegionLabel",
    "GapReport",
    "failure_ratio",
    "value_threshold0",
    "value_threshold1",
    "policy_value",
    "boundary",
    "best_threshold",
    "optimal_threshold",
    "gap_report",
    "hitting_probabilities",
    "enumerate_policies",
    "optimal_by_enumeration",
    "ENUMERATION_MAX_GOAL",
]

# Width of the band around p_c = 0.5 treated as the balanced-walk case.
# The closed forms are continuous across it; the band only avoids 0/0.
_BALANCED_TOL = 1e-12

ENUMERATION_MAX_GOAL = 16


class RegionLabel(enum.Enum):
    """Which side of the decision boundary a problem instance falls on.

    EXPLORATION means the optimal policy never takes the jump action, so a
    learner must force-sample it to estimate its success probability.
    """

    EXPLORATION = "exploration"
    NO_EXPLORATION = "no-exploration"


@dataclass(frozen=True)
class GapReport:
    """Suboptimality gaps and the distance to the decision boundary.

    delta_s[i] is the value gap between the two candidate threshold
    policies when starting from state i + 1; delta_max is its maximum
    (attained at state 1); delta_boundary is the minimum Euclidean
    distance from (p_c, p_f) to the boundary curve, the hardness scale of
    the instance.
    """

    delta_s: tuple[float, ...]
    delta_max: float
    delta_boundary: float


def _hit_top_prob(r: float, a: int, b: int) -> float:
    """Probability a walk with down/up ratio r crosses up a gap of b levels
    before crossing down, starting a levels above the bottom.

    Evaluates (1 - r^a) / (1 - r^b) through expm1 so the value stays
    accurate for r arbitrarily close to 1 and never overflows for large r;
    returns the a/b limit inside the balanced band.
    """
    if not 0 <= a <= b:
        raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")
    if a == 0:
        return 0.0
    if a == b:
        return 1.0
    if r == 0.0:
        return 1.0
    if abs(r - 1.0) < _BALANCED_TOL:
        return a / b
    t = math.log(r)
    if t < 0.0:
        return math.expm1(a * t) / math.expm1(b * t)
    # r > 1: factor r^{-b} through both terms to keep exponentials bounded
    return math.exp((a - b) * t) * math.expm1(-a * t) / math.expm1(-b * t)


def failure_ratio(params: ModelParams) -> float:
    """Down-to-up ratio of the walk, (1 - p_c) / p_c."""
    return params.failure_ratio


def value_threshold0(state: int, params: ModelParams) -> float:
    """Success probability of ThresholdPolicy(0) (pure walk) from ``state``."""
    _check_state(state, params.goal)
    return _hit_top_prob(params.failure_ratio, state, params.goal)


def value_threshold1(state: int, params: ModelParams) -> float:
    """Success probability of ThresholdPolicy(1) (jump only at state 1).

    Walking above state 1 either reaches the goal directly or falls to
    state 1 and takes the jump, so the value interpolates between p_f
    and 1 through the shifted-walk crossing probability.
    """
    _check_state(state, params.goal)
    if state == 0:
        return 0.0
    if state == params.goal:
        return 1.0
    up = _hit_top_prob(params.failure_ratio, state - 1, params.goal - 1)
    return params.p_f + (1.0 - params.p_f) * up


def _check_state(state: int, goal: int) -> None:
    if not 0 <= state <= goal:
        raise ParameterError(f"state must lie in [0, {goal}], got {state}")


def policy_value(policy: Policy, params: ModelParams) -> tuple[np.ndarray, float]:
    """Exact per-state values of an arbitrary stationary policy.

    Solves the (goal - 1)-dimensional linear fixed-point system directly.
    Returns ``(values, scalar)`` where ``values`` has one entry per state
    0 .. goal (terminals included) and ``scalar`` is the q-weighted value.
    """
    goal = params.goal
    acts = policy_actions(policy, goal)
    n = goal - 1
    a = np.zeros((n, n))
    b = np.zeros(n)
    for s in range(1, goal):
        i = s - 1
        a[i, i] = 1.0
        if acts[i] is Action.FINISH:
            b[i] = params.p_f
        else:
            if s + 1 == goal:
                b[i] = params.p_c
            else:
                a[i, i + 1] = -params.p_c
            if s - 1 > 0:
                a[i, i - 1] = -params.p_d
    inner = np.linalg.solve(a, b)
    values = np.concatenate(([0.0], inner, [1.0]))
    scalar = float(np.dot(params.q, inner))
    return values, scalar


def boundary(p_c: float, goal: int) -> float:
    """Jump-success probability at which the two candidate policies tie.

    Equals the pure walk's success probability from state 1 (and 1/goal
    for the balanced walk).  Defined on 0 < p_c < 1; the endpoints are
    accepted and mapped to their limits 0 and 1 because learner estimates
    can land there.
    """
    if p_c <= 0.0:
        return 0.0
    if p_c >= 1.0:
        return 1.0
    return _hit_top_prob((1.0 - p_c) / p_c, 1, goal)


def best_threshold(p_f: float, p_c: float, goal: int) -> int:
    """Decision rule shared by the exact solver and the online learner:
    1 when p_f is at or above the boundary (ties favor finishing, which
    always ends the round), else 0.
    """
    return 1 if p_f >= boundary(p_c, goal) else 0


def optimal_threshold(params: ModelParams) -> tuple[int, RegionLabel]:
    """Optimal threshold (0 or 1) and the region label it implies."""
    tau = best_threshold(params.p_f, params.p_c, params.goal)
    region = RegionLabel.NO_EXPLORATION if tau == 1 else RegionLabel.EXPLORATION
    return tau, region


def gap_report(params: ModelParams) -> GapReport:
    """Per-state gaps between the two candidate policies plus the distance
    from (p_c, p_f) to the decision boundary curve.
    """
    goal = params.goal
    r = params.failure_ratio
    delta_max = abs(params.p_f - boundary(params.p_c, goal))
    # weight(s) = probability the shifted walk falls to the bottom first;
    # weight(1) = 1 and it decreases in s.
    delta_s = tuple(
        (1.0 - _hit_top_prob(r, s - 1, goal - 1)) * delta_max for s in range(1, goal)
    )
    return GapReport(
        delta_s=delta_s,
        delta_max=delta_max,
        delta_boundary=_boundary_distance(params.p_c, params.p_f, goal),
    )


def _boundary_distance(
    p_c: float,
    p_f: float,
    goal: int,
    grid_points: int = 10_000,
    tol: float = 1e-8,
) -> float:
    """Minimum Euclidean distance from (p_c, p_f) to the boundary curve.

    Dense-grid scan over the open unit interval followed by golden-section
    refinement around the best cell.  Numerical on purpose: the exact
    minimizer is a root of a degree-``goal`` polynomial.
    """

    def dist(x: float) -> float:
        return math.hypot(x - p_c, boundary(x, goal) - p_f)

    lo_edge, hi_edge = 1e-9, 1.0 - 1e-9
    xs = np.linspace(lo_edge, hi_edge, grid_points)
    ds = [dist(x) for x in xs]
    k = int(np.argmin(ds))
    lo = xs[max(k - 1, 0)]
    hi = xs[min(k + 1, grid_points - 1)]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = dist(x1), dist(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = dist(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = dist(x2)
    return dist(0.5 * (lo + hi))


def hitting_probabilities(params: ModelParams) -> tuple[float, float]:
    """Per-round action-use probabilities under ThresholdPolicy(1).

    Returns ``(continue_prob, finish_prob)``: the probability that at
    least one walk step is taken (the start is above state 1) and the
    probability that the jump is taken (the walk falls to state 1 before
    reaching the goal).
    """
    goal = params.goal
    r = params.failure_ratio
    continue_prob = 1.0 - params.q[0]
    finish_prob = sum(
        params.q[s - 1] * (1.0 - _hit_top_prob(r, s - 1, goal - 1)) for s in range(1, goal)
    )
    return continue_prob, finish_prob


def enumerate_policies(goal: int) -> list[TablePolicy]:
    """All 2^(goal-1) deterministic stationary policies, in a fixed order."""
    if goal > ENUMERATION_MAX_GOAL:
        raise ParameterError(
            f"enumeration is guarded to goal <= {ENUMERATION_MAX_GOAL}, got {goal}"
        )
    combos = itertools.product((Action.CONTINUE, Action.FINISH), repeat=goal - 1)
    return [TablePolicy(actions) for actions in combos]


def _is_threshold_form(actions: tuple[Action, ...]) -> bool:
    seen_continue = False
    for act in actions:
        if act is Action.CONTINUE:
            seen_continue = True
        elif seen_continue:
            return False
    return True


def optimal_by_enumeration(params: ModelParams) -> tuple[TablePolicy, float]:
    """Exhaustive argmax over every enumerated policy.

    Exact float ties are broken toward threshold-form policies, then
    toward policies that jump in more states.  Serves as the independent
    oracle for the threshold rule.
    """
    best_policy = None
    best_value = -1.0
    best_pref = (-1, -1)
    for policy in enumerate_policies(params.goal):
        _, value = policy_value(policy, params)
        pref = (
            int(_is_threshold_form(policy.actions)),
            sum(1 for act in policy.actions if act is Action.FINISH),
        )
        if value > best_value or (value == best_value and pref > best_pref):
            best_policy, best_value, best_pref = policy, value, pref
    return best_policy, best_value
