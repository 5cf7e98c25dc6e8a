"""Monte Carlo experiment orchestration and regret accounting.

Regret is charged per round against the optimal value.  In PSEUDO mode a
round costs the analytic value shortfall of the behavior the learner
committed to (forced-exploration rounds cost the jump-success shortfall,
since jumping immediately succeeds with probability p_f from any start);
in EMPIRICAL mode it costs the shortfall of the realized 0/1 reward.  The
two agree in expectation.

Iterations are embarrassingly parallel: every (algorithm, iteration) cell
gets an independent random stream addressed by the master seed, so output
is byte-identical for 1 or N workers.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import analytics
from .core import ModelParams, ParameterError, Policy, ThresholdPolicy, spawn_rng
from .learners import (
    BanditMethod,
    Estimator,
    InitScheme,
    Learner,
    OracleLearner,
    PolicyBandit,
    ThresholdLearner,
    ThresholdLearnerConfig,
)

__all__ = [
    "RegretMode",
    "ExperimentConfig",
    "RegretCurve",
    "RoundLog",
    "SweepConfig",
    "SweepCell",
    "SweepResult",
    "ALGORITHMS",
    "WORKERS_ENV_VAR",
    "build_learner",
    "round_regret_increment",
    "run_iteration_log",
    "run_experiment",
    "sweep",
    "write_regret_csv",
    "write_sweep_csv",
    "write_sidecar",
    "config_to_dict",
    "config_from_dict",
]

WORKERS_ENV_VAR = "RUINBANDIT_WORKERS"


class RegretMode(enum.Enum):
    PSEUDO = "pseudo"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark: an instance, a horizon, algorithms, and a seed."""

    params: ModelParams
    horizon: int
    iterations: int
    algorithms: tuple[str, ...]
    master_seed: int
    regret_mode: RegretMode = RegretMode.PSEUDO
    gamma: float = 15.0
    init: InitScheme = InitScheme.RANDOM_UNIT

    def __post_init__(self):
        if self.horizon < 1:
            raise ParameterError(f"horizon must be >= 1, got {self.horizon}")
        if self.iterations < 1:
            raise ParameterError(f"iterations must be >= 1, got {self.iterations}")
        if not self.algorithms:
            raise ParameterError("algorithms list must not be empty")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                known = ", ".join(sorted(ALGORITHMS))
                raise ParameterError(f"unknown algorithm {name!r}; known: {known}")
        if self.gamma <= 0.0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class RegretCurve:
    """Cumulative regret mean and sample std across iterations, rounds 1..T."""

    algorithm: str
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class RoundLog:
    """Per-round record of a single iteration.

    ``threshold[t]`` is the committed policy's threshold (-1 when the
    round played a non-threshold table policy), ``finish_steps[t]`` the
    jump count of the round, both kept so exploration budgets and arm
    pulls can be audited after the fact.
    """

    cum_pseudo: np.ndarray
    cum_empirical: np.ndarray
    explored: np.ndarray
    threshold: np.ndarray
    finish_steps: np.ndarray
    rewards: np.ndarray

    def regret(self, mode: RegretMode) -> np.ndarray:
        return self.cum_pseudo if mode is RegretMode.PSEUDO else self.cum_empirical


def _threshold_builder(estimator: Estimator) -> Callable[[ExperimentConfig], Learner]:
    def build(config: ExperimentConfig) -> Learner:
        return ThresholdLearner(
            config.params.goal,
            ThresholdLearnerConfig(gamma=config.gamma, estimator=estimator, init=config.init),
        )

    return build


def _polselect_builder(method: BanditMethod, full: bool) -> Callable[[ExperimentConfig], Learner]:
    def build(config: ExperimentConfig) -> Learner:
        if full:
            arms: list[Policy] = list(analytics.enumerate_policies(config.params.goal))
        else:
            arms = [ThresholdPolicy(0), ThresholdPolicy(1)]
        return PolicyBandit(arms, method)

    return build


ALGORITHMS: dict[str, Callable[[ExperimentConfig], Learner]] = {
    "threshold-sm": _threshold_builder(Estimator.SAMPLE_MEAN),
    "threshold-ps": _threshold_builder(Estimator.POSTERIOR),
    "threshold-ucb": _threshold_builder(Estimator.UCB),
    "polselect-ucb": _polselect_builder(BanditMethod.UCB, full=False),
    "polselect-ps": _polselect_builder(BanditMethod.POSTERIOR, full=False),
    "polselect-ucb-full": _polselect_builder(BanditMethod.UCB, full=True),
    "oracle": lambda config: OracleLearner(),
}


def build_learner(name: str, config: ExperimentConfig) -> Learner:
    try:
        builder = ALGORITHMS[name]
    except KeyError:
        raise ParameterError(f"unknown algorithm {name!r}") from None
    return builder(config)


def round_regret_increment(executed_value: float, v_star: float) -> float:
    """Regret charged for one round whose behavior is worth ``executed_value``."""
    return v_star - executed_value


def _stable_hash(text: str) -> int:
    """Deterministic 64-bit integer for seed derivation (hash() is salted)."""
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def optimal_value(params: ModelParams) -> float:
    """Value of the optimal policy (the better candidate threshold)."""
    _, v0 = analytics.policy_value(ThresholdPolicy(0), params)
    _, v1 = analytics.policy_value(ThresholdPolicy(1), params)
    return max(v0, v1)


def run_iteration_log(config: ExperimentConfig, algorithm: str, iteration: int) -> RoundLog:
    """Simulate one independent iteration of one algorithm and log it."""
    params = config.params
    rng = spawn_rng(config.master_seed, _stable_hash(algorithm), iteration)
    learner = build_learner(algorithm, config)
    learner.initialize(params, rng)

    v_star = optimal_value(params)
    value_cache: dict[Policy, float] = {}

    horizon = config.horizon
    cum_pseudo = np.empty(horizon)
    cum_empirical = np.empty(horizon)
    explored = np.empty(horizon, dtype=bool)
    threshold = np.empty(horizon, dtype=np.int64)
    finish_steps = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=np.int64)

    acc_pseudo = 0.0
    acc_empirical = 0.0
    for t in range(horizon):
        report = learner.play_round(params, rng)
        if report.explored:
            executed = params.p_f
        else:
            executed = value_cache.get(report.policy)
            if executed is None:
                executed = analytics.policy_value(report.policy, params)[1]
                value_cache[report.policy] = executed
        acc_pseudo += round_regret_increment(executed, v_star)
        acc_empirical += round_regret_increment(report.trace.reward, v_star)
        cum_pseudo[t] = acc_pseudo
        cum_empirical[t] = acc_empirical
        explored[t] = report.explored
        threshold[t] = (
            report.policy.threshold if isinstance(report.policy, ThresholdPolicy) else -1
        )
        finish_steps[t] = report.trace.t_f
        rewards[t] = report.trace.reward
    return RoundLog(cum_pseudo, cum_empirical, explored, threshold, finish_steps, rewards)


def _regret_task(args: tuple[ExperimentConfig, str, int]) -> np.ndarray:
    config, algorithm, iteration = args
    return run_iteration_log(config, algorithm, iteration).regret(config.regret_mode)


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    if workers < 1:
        raise ParameterError(f"worker count must be >= 1, got {workers}")
    return workers


def run_experiment(
    config: ExperimentConfig,
    workers: int | None = None,
) -> dict[str, RegretCurve]:
    """Regret curves for every configured algorithm.

    ``workers`` defaults to the RUINBANDIT_WORKERS environment variable
    (1 if unset); results do not depend on it.
    """
    workers = resolve_workers(workers)
    tasks = [
        (config, algorithm, iteration)
        for algorithm in config.algorithms
        for iteration in range(config.iterations)
    ]
    if workers == 1:
        results = [_regret_task(task) for task in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_regret_task, tasks, chunksize=chunk))

    curves: dict[str, RegretCurve] = {}
    for a, algorithm in enumerate(config.algorithms):
        block = np.vstack(results[a * config.iterations : (a + 1) * config.iterations])
        std = block.std(axis=0, ddof=1) if config.iterations > 1 else np.zeros(config.horizon)
        curves[algorithm] = RegretCurve(algorithm, block.mean(axis=0), std)
    return curves


@dataclass(frozen=True)
class SweepConfig:
    """Grid of (p_c, p_f) cells, one experiment per cell."""

    goal: int
    p_c_values: tuple[float, ...]
    p_f_values: tuple[float, ...]
    horizon: int
    iterations: int
    algorithm: str
    master_seed: int
    q: tuple[float, ...] | None = None
    regret_mode: RegretMode = RegretMode.PSEUDO
    gamma: float = 15.0
    init: InitScheme = InitScheme.RANDOM_UNIT

    def __post_init__(self):
        for grid, label in ((self.p_c_values, "p_c"), (self.p_f_values, "p_f")):
            if not grid:
                raise ParameterError(f"{label} grid must not be empty")
            if any(not 0.0 < v < 1.0 for v in grid):
                raise ParameterError(f"{label} grid values must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class SweepCell:
    p_c: float
    p_f: float
    region: analytics.RegionLabel
    regret_mean: float
    regret_std: float
    boundary: float


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    cells: tuple[SweepCell, ...]


def sweep(config: SweepConfig, workers: int | None = None) -> SweepResult:
    """Regret at the horizon for every grid cell, plus each cell's region
    label and the boundary sample at its p_c (for the overlay plot)."""
    q = config.q if config.q is not None else tuple(
        1.0 / (config.goal - 1) for _ in range(config.goal - 1)
    )
    cells = []
    for i, p_c in enumerate(config.p_c_values):
        for j, p_f in enumerate(config.p_f_values):
            params = ModelParams(config.goal, p_c, p_f, q)
            cell_seed = _stable_hash(f"sweep/{config.master_seed}/{i}/{j}")
            experiment = ExperimentConfig(
                params=params,
                horizon=config.horizon,
                iterations=config.iterations,
                algorithms=(config.algorithm,),
                master_seed=cell_seed,
                regret_mode=config.regret_mode,
                gamma=config.gamma,
                init=config.init,
            )
            curve = run_experiment(experiment, workers=workers)[config.algorithm]
            _, region = analytics.optimal_threshold(params)
            cells.append(
                SweepCell(
                    p_c=p_c,
                    p_f=p_f,
                    region=region,
                    regret_mean=float(curve.mean[-1]),
                    regret_std=float(curve.std[-1]),
                    boundary=analytics.boundary(p_c, config.goal),
                )
            )
    return SweepResult(config=config, cells=tuple(cells))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_regret_csv(curves: dict[str, RegretCurve], path: str | Path) -> Path:
    """One row per (round, algorithm): round,algorithm,regret_mean,regret_std."""
    path = Path(path)
    lines = ["round,algorithm,regret_mean,regret_std"]
    for algorithm, curve in curves.items():
        for t in range(curve.mean.shape[0]):
            lines.append(f"{t + 1},{algorithm},{_fmt(curve.mean[t])},{_fmt(curve.std[t])}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_sweep_csv(result: SweepResult, path: str | Path) -> Path:
    """One row per cell: p_c,p_f,region,regret_mean,regret_std,boundary."""
    path = Path(path)
    lines = ["p_c,p_f,region,regret_mean,regret_std,boundary"]
    for c in result.cells:
        lines.append(
            f"{_fmt(c.p_c)},{_fmt(c.p_f)},{c.region.value},"
            f"{_fmt(c.regret_mean)},{_fmt(c.regret_std)},{_fmt(c.boundary)}"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "model": {
            "goal": config.params.goal,
            "p_c": config.params.p_c,
            "p_f": config.params.p_f,
            "q": list(config.params.q),
        },
        "experiment": {
            "horizon": config.horizon,
            "iterations": config.iterations,
            "algorithms": list(config.algorithms),
            "seed": config.master_seed,
            "mode": config.regret_mode.value,
            "gamma": config.gamma,
            "init": config.init.value,
        },
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    model = data["model"]
    experiment = data["experiment"]
    return ExperimentConfig(
        params=ModelParams(model["goal"], model["p_c"], model["p_f"], model["q"]),
        horizon=int(experiment["horizon"]),
        iterations=int(experiment["iterations"]),
        algorithms=tuple(experiment["algorithms"]),
        master_seed=int(experiment["seed"]),
        regret_mode=RegretMode(experiment.get("mode", "pseudo")),
        gamma=float(experiment.get("gamma", 15.0)),
        init=InitScheme(experiment.get("init", "random-unit")),
    )


def write_sidecar(data: dict, path: str | Path) -> Path:
    """Provenance record: the fully resolved config, reproducible as-is."""
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
