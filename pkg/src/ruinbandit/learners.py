"""Online learners sharing one per-round interface: observe the initial
state, act until the round terminates, update internal statistics.

``ThresholdLearner`` is the structure-aware algorithm: it estimates the
two transition probabilities, plays the threshold policy those estimates
imply, and (in its sample-mean variant) force-samples the jump action
under a logarithmic budget whenever the estimated policy would never take
it.  ``PolicyBandit`` treats whole policies as bandit arms (UCB1 or
Thompson sampling) and ``OracleLearner`` plays the optimal policy from
round 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import analytics
from .core import (
    Action,
    ModelParams,
    ParameterError,
    Policy,
    RoundTrace,
    TablePolicy,
    ThresholdPolicy,
    policy_actions,
    run_round,
    sample_initial_state,
    step,
)

__all__ = [
    "Counters",
    "Estimator",
    "InitScheme",
    "BanditMethod",
    "ThresholdLearnerConfig",
    "RoundReport",
    "Learner",
    "ThresholdLearner",
    "PolicyBandit",
    "OracleLearner",
    "estimates",
    "estimator_probs",
    "control",
    "decide_action",
    "initialize_counters",
    "policy_to_dict",
    "policy_from_dict",
    "learner_from_snapshot",
]


class Estimator(enum.Enum):
    """How the threshold learner turns counters into probabilities."""

    SAMPLE_MEAN = "sample-mean"
    POSTERIOR = "posterior"
    UCB = "ucb"


class InitScheme(enum.Enum):
    """How the first unit of evidence for each action is produced.

    SEED_ROUNDS plays one walk step and one jump before the horizon
    starts; RANDOM_UNIT charges each action one pseudo-observation with a
    uniform random success fraction (counters become real-valued).
    """

    SEED_ROUNDS = "seed-rounds"
    RANDOM_UNIT = "random-unit"


class BanditMethod(enum.Enum):
    """Arm-selection rule for the policy-as-arm baselines."""

    UCB = "ucb"
    POSTERIOR = "posterior"


@dataclass
class Counters:
    """Sufficient statistics across rounds: jumps taken / jumps that hit
    the goal / walk steps taken / walk steps that moved up.

    Real-valued to admit the RANDOM_UNIT pseudo-counts; with SEED_ROUNDS
    every field stays integral.
    """

    n_f: float = 0.0
    n_fg: float = 0.0
    n_c: float = 0.0
    n_cu: float = 0.0

    def merge(self, trace: RoundTrace) -> None:
        self.n_f += trace.t_f
        self.n_fg += trace.t_fg
        self.n_c += trace.t_c
        self.n_cu += trace.t_cu


@dataclass(frozen=True)
class ThresholdLearnerConfig:
    """Knobs of the threshold learner.

    ``gamma`` scales the forced-exploration budget ``gamma * ln(round)``;
    it is a knob because the value that theory would prescribe depends on
    the unknown transition probabilities.  Defaults follow the benchmark
    protocol (sample means, gamma 15, random-unit initialization).
    """

    gamma: float = 15.0
    estimator: Estimator = Estimator.SAMPLE_MEAN
    init: InitScheme = InitScheme.RANDOM_UNIT

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class RoundReport:
    """Outcome of one learner round: the trace, the policy the learner
    committed to, and whether the jump was forced off-policy."""

    trace: RoundTrace
    policy: Policy
    explored: bool


def estimates(counters: Counters) -> tuple[float, float, float]:
    """Sample-mean estimates (jump success, up-move, down/up ratio)."""
    if counters.n_f <= 0 or counters.n_c <= 0:
        raise ParameterError("estimates need n_f >= 1 and n_c >= 1; initialization contract violated")
    p_f_hat = counters.n_fg / counters.n_f
    p_c_hat = counters.n_cu / counters.n_c
    r_hat = math.inf if p_c_hat == 0.0 else (1.0 - p_c_hat) / p_c_hat
    return p_f_hat, p_c_hat, r_hat


def estimator_probs(
    counters: Counters,
    estimator: Estimator,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Probability pair fed to the threshold rule, per estimator variant."""
    p_f_hat, p_c_hat, _ = estimates(counters)
    if estimator is Estimator.SAMPLE_MEAN:
        return p_f_hat, p_c_hat
    if estimator is Estimator.POSTERIOR:
        p_f = rng.beta(counters.n_fg + 1.0, counters.n_f - counters.n_fg + 1.0)
        p_c = rng.beta(counters.n_cu + 1.0, counters.n_c - counters.n_cu + 1.0)
        return float(p_f), float(p_c)
    # UCB: optimism-inflated means, clamped because the threshold rule
    # consumes probabilities.
    log_total = math.log(counters.n_f + counters.n_c)
    p_f = p_f_hat + math.sqrt(2.0 * log_total / counters.n_f)
    p_c = p_c_hat + math.sqrt(2.0 * log_total / counters.n_c)
    return min(max(p_f, 0.0), 1.0), min(max(p_c, 0.0), 1.0)


def control(rho: int, gamma: float) -> float:
    """Forced-exploration budget by round ``rho``: gamma * ln(rho)."""
    if rho < 1:
        raise ParameterError(f"round index must be >= 1, got {rho}")
    return gamma * math.log(rho)


def decide_action(state: int, tau: int, explore_active: bool) -> Action:
    """Jump when forced exploration is active or the state is at or below
    the chosen threshold; walk otherwise."""
    return Action.FINISH if (explore_active or state <= tau) else Action.CONTINUE


def initialize_counters(
    scheme: InitScheme,
    params: ModelParams,
    rng: np.random.Generator,
) -> Counters:
    """One unit of evidence per action, by the configured scheme."""
    if scheme is InitScheme.RANDOM_UNIT:
        return Counters(n_f=1.0, n_fg=float(rng.random()), n_c=1.0, n_cu=float(rng.random()))
    # SEED_ROUNDS: one real walk step, then one real jump (a fresh round
    # is started for the jump if the walk step already terminated).
    s = sample_initial_state(params, rng)
    after = step(s, Action.CONTINUE, params, rng)
    n_cu = 1.0 if after == s + 1 else 0.0
    if after == 0 or after == params.goal:
        after = sample_initial_state(params, rng)
    landed = step(after, Action.FINISH, params, rng)
    n_fg = 1.0 if landed == params.goal else 0.0
    return Counters(n_f=1.0, n_fg=n_fg, n_c=1.0, n_cu=n_cu)


class Learner:
    """Common per-round interface; subclasses own their statistics."""

    name = "learner"

    def initialize(self, params: ModelParams, rng: np.random.Generator) -> None:
        """Pre-horizon setup; may interact with the environment."""

    def play_round(self, params: ModelParams, rng: np.random.Generator) -> RoundReport:
        raise NotImplementedError

    def snapshot(self) -> dict:
        raise NotImplementedError


class ThresholdLearner(Learner):
    """Plug-in estimation of the two transition probabilities plus the
    exact threshold decision rule, with control-function-gated forced
    exploration in the sample-mean variant."""

    name = "threshold"

    def __init__(self, goal: int, config: ThresholdLearnerConfig | None = None):
        self.goal = int(goal)
        self.config = config or ThresholdLearnerConfig()
        self.counters: Counters | None = None
        self.rho = 1

    def initialize(self, params: ModelParams, rng: np.random.Generator) -> None:
        self.counters = initialize_counters(self.config.init, params, rng)
        self.rho = 1

    def play_round(self, params: ModelParams, rng: np.random.Generator) -> RoundReport:
        if self.counters is None:
            raise ParameterError("learner must be initialized before playing rounds")
        p_f, p_c = estimator_probs(self.counters, self.config.estimator, rng)
        tau = analytics.best_threshold(p_f, p_c, self.goal)
        # The exploration gate is frozen at round start: with tau = 0 the
        # forced jump can only ever fire in the first slot anyway.
        explore = (
            self.config.estimator is Estimator.SAMPLE_MEAN
            and tau == 0
            and self.counters.n_f < control(self.rho, self.config.gamma)
        )
        if explore:
            decide = lambda s, t: Action.FINISH
        elif tau == 0:
            decide = lambda s, t: Action.CONTINUE
        else:
            decide = lambda s, t: Action.FINISH if s <= tau else Action.CONTINUE
        trace = run_round(decide, params, rng)
        self.counters.merge(trace)
        self.rho += 1
        return RoundReport(trace=trace, policy=ThresholdPolicy(tau), explored=explore)

    def snapshot(self) -> dict:
        return {
            "kind": "threshold",
            "goal": self.goal,
            "round_index": self.rho,
            "config": {
                "gamma": self.config.gamma,
                "estimator": self.config.estimator.value,
                "init": self.config.init.value,
            },
            "counters": None
            if self.counters is None
            else {
                "n_f": self.counters.n_f,
                "n_fg": self.counters.n_fg,
                "n_c": self.counters.n_c,
                "n_cu": self.counters.n_cu,
            },
        }

    @classmethod
    def from_snapshot(cls, data: dict) -> "ThresholdLearner":
        config = ThresholdLearnerConfig(
            gamma=data["config"]["gamma"],
            estimator=Estimator(data["config"]["estimator"]),
            init=InitScheme(data["config"]["init"]),
        )
        learner = cls(data["goal"], config)
        learner.rho = data["round_index"]
        if data["counters"] is not None:
            learner.counters = Counters(**data["counters"])
        return learner


class PolicyBandit(Learner):
    """Policies as arms: pull one arm per round, reward 1 on reaching the
    goal.  Every arm is pulled once before the selection rule kicks in."""

    name = "policy-bandit"

    def __init__(self, arms: list[Policy], method: BanditMethod):
        if not arms:
            raise ParameterError("policy bandit needs at least one arm")
        self.arms = list(arms)
        self.method = method
        self.pulls = np.zeros(len(arms), dtype=np.float64)
        self.wins = np.zeros(len(arms), dtype=np.float64)
        self.rho = 1

    def initialize(self, params: ModelParams, rng: np.random.Generator) -> None:
        for arm in self.arms:  # validates arm/chain compatibility early
            policy_actions(arm, params.goal)

    def _choose(self, rng: np.random.Generator) -> int:
        k = len(self.arms)
        if self.rho <= k:
            return self.rho - 1
        if self.method is BanditMethod.UCB:
            total = self.pulls.sum()
            index = self.wins / self.pulls + np.sqrt(2.0 * np.log(total) / self.pulls)
            return int(np.argmax(index))
        samples = rng.beta(self.wins + 1.0, self.pulls - self.wins + 1.0)
        return int(np.argmax(samples))

    def play_round(self, params: ModelParams, rng: np.random.Generator) -> RoundReport:
        arm = self._choose(rng)
        policy = self.arms[arm]
        trace = run_round(lambda s, t: policy.action(s), params, rng)
        self.pulls[arm] += 1.0
        self.wins[arm] += trace.reward
        self.rho += 1
        return RoundReport(trace=trace, policy=policy, explored=False)

    def snapshot(self) -> dict:
        return {
            "kind": "policy-bandit",
            "method": self.method.value,
            "round_index": self.rho,
            "arms": [policy_to_dict(arm) for arm in self.arms],
            "pulls": self.pulls.tolist(),
            "wins": self.wins.tolist(),
        }

    @classmethod
    def from_snapshot(cls, data: dict) -> "PolicyBandit":
        learner = cls(
            [policy_from_dict(d) for d in data["arms"]],
            BanditMethod(data["method"]),
        )
        learner.rho = data["round_index"]
        learner.pulls = np.asarray(data["pulls"], dtype=np.float64)
        learner.wins = np.asarray(data["wins"], dtype=np.float64)
        return learner


class OracleLearner(Learner):
    """Benchmark agent that knows the instance and plays the optimal
    threshold policy from round 1."""

    name = "oracle"

    def __init__(self):
        self.policy: ThresholdPolicy | None = None
        self.rho = 1

    def initialize(self, params: ModelParams, rng: np.random.Generator) -> None:
        tau, _ = analytics.optimal_threshold(params)
        self.policy = ThresholdPolicy(tau)
        self.rho = 1

    def play_round(self, params: ModelParams, rng: np.random.Generator) -> RoundReport:
        if self.policy is None:
            raise ParameterError("learner must be initialized before playing rounds")
        policy = self.policy
        trace = run_round(lambda s, t: policy.action(s), params, rng)
        self.rho += 1
        return RoundReport(trace=trace, policy=policy, explored=False)

    def snapshot(self) -> dict:
        return {
            "kind": "oracle",
            "round_index": self.rho,
            "policy": None if self.policy is None else policy_to_dict(self.policy),
        }

    @classmethod
    def from_snapshot(cls, data: dict) -> "OracleLearner":
        learner = cls()
        learner.rho = data["round_index"]
        if data["policy"] is not None:
            learner.policy = policy_from_dict(data["policy"])
        return learner


def policy_to_dict(policy: Policy) -> dict:
    if isinstance(policy, ThresholdPolicy):
        return {"kind": "threshold", "threshold": policy.threshold}
    return {"kind": "table", "actions": [a.value for a in policy.actions]}


def policy_from_dict(data: dict) -> Policy:
    if data["kind"] == "threshold":
        return ThresholdPolicy(data["threshold"])
    return TablePolicy(tuple(Action(a) for a in data["actions"]))


_SNAPSHOT_KINDS = {
    "threshold": ThresholdLearner,
    "policy-bandit": PolicyBandit,
    "oracle": OracleLearner,
}


def learner_from_snapshot(data: dict) -> Learner:
    """Rebuild a learner from its :meth:`Learner.snapshot` dict."""
    try:
        cls = _SNAPSHOT_KINDS[data["kind"]]
    except KeyError:
        raise ParameterError(f"unknown learner snapshot kind {data.get('kind')!r}") from None
    return cls.from_snapshot(data)
