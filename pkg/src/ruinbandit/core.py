"""Domain types and the stochastic chain environment.

The state space is the integer chain ``{0, 1, ..., goal}`` where 0 is the
dead end and ``goal`` is the absorbing success state.  In every
non-terminal state the agent either *continues* (random walk step, up with
probability ``p_c``) or *finishes* (jump straight to the goal with
probability ``p_f``, otherwise to the dead end).  A round starts from a
random initial state and ends when a terminal state is hit.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "DEAD_END",
    "DEFAULT_STEP_CAP",
    "Action",
    "ModelParams",
    "ThresholdPolicy",
    "TablePolicy",
    "Policy",
    "RoundTrace",
    "ParameterError",
    "StepCapExceeded",
    "uniform_q",
    "sample_initial_state",
    "step",
    "run_round",
    "simulate_policy_rounds",
    "make_rng",
    "spawn_rng",
]

DEAD_END = 0

# The chain is absorbing, so a round that runs this long signals a bug in
# the dynamics rather than bad luck (expected hitting times are tiny for
# any goal index this library is used with).
DEFAULT_STEP_CAP = 10_000_000


class ParameterError(ValueError):
    """A model or experiment parameter violates one of its invariants."""


class StepCapExceeded(RuntimeError):
    """A round failed to reach a terminal state within the step cap."""


class Action(enum.Enum):
    """The two per-slot choices: random-walk step vs. direct jump."""

    CONTINUE = "continue"
    FINISH = "finish"


@dataclass(frozen=True)
class ModelParams:
    """One problem instance.

    Attributes:
        goal: index of the success state (dead end is fixed at 0), >= 2.
        p_c: probability that a CONTINUE step moves up.
        p_f: probability that a FINISH jump lands on the goal.
        q: distribution of the initial state over ``{1, ..., goal-1}``.
    """

    goal: int
    p_c: float
    p_f: float
    q: tuple[float, ...]

    def __init__(self, goal: int, p_c: float, p_f: float, q: Sequence[float]):
        object.__setattr__(self, "goal", int(goal))
        object.__setattr__(self, "p_c", float(p_c))
        object.__setattr__(self, "p_f", float(p_f))
        object.__setattr__(self, "q", tuple(float(w) for w in q))
        self._validate()

    def _validate(self) -> None:
        if self.goal < 2:
            raise ParameterError(f"goal must be an integer >= 2, got {self.goal}")
        if not 0.0 < self.p_c < 1.0:
            raise ParameterError(f"p_c must lie strictly between 0 and 1, got {self.p_c}")
        if not 0.0 < self.p_f < 1.0:
            raise ParameterError(f"p_f must lie strictly between 0 and 1, got {self.p_f}")
        if len(self.q) != self.goal - 1:
            raise ParameterError(
                f"q must have one entry per initial state ({self.goal - 1}), got {len(self.q)}"
            )
        if any(w < 0.0 for w in self.q):
            raise ParameterError("q entries must be nonnegative")
        total = sum(self.q)
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(f"q must sum to 1 within 1e-12, got {total!r}")
        # q(1) = 1 would starve the walk-step estimator: the agent would
        # never be above state 1 while following the finish-at-1 policy.
        # At goal = 2 there is only one initial state, so the condition is
        # vacuous and q = (1,) is accepted.
        if self.goal > 2 and 1.0 - self.q[0] <= 0.0:
            raise ParameterError("q must place positive mass on states above 1 (1 - q(1) > 0)")

    @property
    def p_d(self) -> float:
        """Probability that a CONTINUE step moves down."""
        return 1.0 - self.p_c

    @property
    def failure_ratio(self) -> float:
        """Down-to-up ratio of the walk, (1 - p_c) / p_c."""
        return (1.0 - self.p_c) / self.p_c

    @property
    def initial_states(self) -> range:
        return range(1, self.goal)

    @cached_property
    def _cum_q(self) -> tuple[float, ...]:
        acc, out = 0.0, []
        for w in self.q:
            acc += w
            out.append(acc)
        return tuple(out)


def uniform_q(goal: int) -> tuple[float, ...]:
    """Uniform initial-state distribution over ``{1, ..., goal-1}``."""
    n = goal - 1
    return tuple(1.0 / n for _ in range(n))


@dataclass(frozen=True)
class ThresholdPolicy:
    """Finish at or below the threshold, continue above it.

    ``threshold = 0`` never finishes; ``threshold = goal - 1`` always does.
    """

    threshold: int

    def __post_init__(self):
        if self.threshold < 0:
            raise ParameterError(f"threshold must be >= 0, got {self.threshold}")

    def action(self, state: int) -> Action:
        return Action.FINISH if state <= self.threshold else Action.CONTINUE


@dataclass(frozen=True)
class TablePolicy:
    """Explicit state -> action map; entry ``actions[s - 1]`` rules state s."""

    actions: tuple[Action, ...]

    def action(self, state: int) -> Action:
        return self.actions[state - 1]


Policy = Union[ThresholdPolicy, TablePolicy]


def policy_actions(policy: Policy, goal: int) -> tuple[Action, ...]:
    """Expand a policy into its action at every state ``1 .. goal-1``."""
    if isinstance(policy, TablePolicy):
        if len(policy.actions) != goal - 1:
            raise ParameterError(
                f"policy covers {len(policy.actions)} states but the chain has {goal - 1}"
            )
        return policy.actions
    if policy.threshold > goal - 1:
        raise ParameterError(f"threshold {policy.threshold} exceeds goal - 1 = {goal - 1}")
    return tuple(policy.action(s) for s in range(1, goal))


@dataclass(frozen=True)
class RoundTrace:
    """Everything observed in one round.

    ``states`` runs from the initial state to the terminal state.  The
    tallies count per-round action outcomes: ``t_f``/``t_fg`` are
    finish-jumps taken / finish-jumps that hit the goal, ``t_c``/``t_cu``
    are walk steps taken / walk steps that moved up.
    """

    states: tuple[int, ...]
    t_f: int
    t_fg: int
    t_c: int
    t_cu: int
    reward: int


def make_rng(seed) -> np.random.Generator:
    """Generator from a seed or seed material (int, sequence, SeedSequence)."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def spawn_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Independent stream addressed by (master seed, index path).

    Two calls with the same arguments yield identical streams; distinct
    paths are statistically independent, so workers can be seeded without
    any coordination or ordering.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, path)]))


def sample_initial_state(params: ModelParams, rng: np.random.Generator) -> int:
    """Draw the round's starting state from q."""
    u = rng.random()
    idx = bisect_right(params._cum_q, u)
    if idx > params.goal - 2:  # guards the u ~ 1.0 float edge
        idx = params.goal - 2
    return idx + 1


def step(state: int, action: Action, params: ModelParams, rng: np.random.Generator) -> int:
    """One state transition; raises on terminal input states."""
    if state <= DEAD_END or state >= params.goal:
        raise ParameterError(f"cannot step from terminal state {state}")
    if action is Action.FINISH:
        return params.goal if rng.random() < params.p_f else DEAD_END
    return state + 1 if rng.random() < params.p_c else state - 1


def run_round(
    decide: Callable[[int, int], Action],
    params: ModelParams,
    rng: np.random.Generator,
    step_cap: int = DEFAULT_STEP_CAP,
) -> RoundTrace:
    """Play one round under ``decide(state, timeslot)`` and record the trace."""
    goal = params.goal
    p_c = params.p_c
    p_f = params.p_f
    rand = rng.random

    s = sample_initial_state(params, rng)
    states = [s]
    t_f = t_fg = t_c = t_cu = 0
    for t in range(1, step_cap + 1):
        if decide(s, t) is Action.FINISH:
            s = goal if rand() < p_f else DEAD_END
            t_f += 1
            if s == goal:
                t_fg += 1
        else:
            t_c += 1
            if rand() < p_c:
                s += 1
                t_cu += 1
            else:
                s -= 1
        states.append(s)
        if s == DEAD_END or s == goal:
            return RoundTrace(tuple(states), t_f, t_fg, t_c, t_cu, int(s == goal))
    raise StepCapExceeded(f"round still running after {step_cap} steps; dynamics bug likely")


def simulate_policy_rounds(
    policy: Policy,
    params: ModelParams,
    n_rounds: int,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Vectorized Monte Carlo of a fixed stationary policy.

    Runs ``n_rounds`` independent rounds in lockstep (one uniform draw per
    active round per slot) and returns arrays ``rewards`` (0/1) and
    ``took_finish`` (whether the jump action was used).  Semantics match
    :func:`run_round`; a statistical cross-check of the two lives in the
    test suite.  Use this for estimation-scale runs where the per-round
    engine would be too slow.
    """
    goal = params.goal
    acts = policy_actions(policy, goal)
    finish_at = np.zeros(goal + 1, dtype=bool)
    for s in range(1, goal):
        finish_at[s] = acts[s - 1] is Action.FINISH

    states = rng.choice(np.arange(1, goal), size=n_rounds, p=np.asarray(params.q))
    took_finish = np.zeros(n_rounds, dtype=bool)
    active = np.ones(n_rounds, dtype=bool)
    # Worst-case expected round length is O(goal^2); the loop count is
    # random but terminates with probability 1.
    while True:
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        cur = states[idx]
        u = rng.random(idx.size)
        fin = finish_at[cur]
        nxt = np.where(u < params.p_c, cur + 1, cur - 1)
        nxt[fin] = np.where(u[fin] < params.p_f, goal, DEAD_END)
        took_finish[idx[fin]] = True
        states[idx] = nxt
        done = (nxt == DEAD_END) | (nxt == goal)
        active[idx[done]] = False
    return {
        "rewards": (states == goal).astype(np.int64),
        "took_finish": took_finish,
    }
