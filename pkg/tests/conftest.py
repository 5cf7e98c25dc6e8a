"""Shared fixtures: the two benchmark protocols used across test modules.

Both benchmarks follow the standard protocol (goal 4, uniform initial
states, horizon 5000, 200 iterations, gamma 15, random-unit counter
initialization); one instance sits in the no-exploration region, the
other in the exploration region.  Runs are deterministic via a fixed
master seed, so every assertion against them is reproducible.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import pytest

from ruinbandit.core import ModelParams, uniform_q
from ruinbandit.harness import ExperimentConfig, run_iteration_log

ACCEPTANCE_RESULTS: list[str] = []


@pytest.fixture
def criterion():
    """Context-manager factory recording a PASS/FAIL line per acceptance
    criterion; lines are printed immediately (visible under -s) and again
    in the terminal summary."""

    @contextmanager
    def tracker(number: int, name: str):
        detail = {}
        try:
            yield detail
        except BaseException:
            line = f"ACCEPTANCE {number} {name}: FAIL"
            print(line)
            ACCEPTANCE_RESULTS.append(line)
            raise
        extra = f" ({detail['note']})" if "note" in detail else ""
        line = f"ACCEPTANCE {number} {name}: PASS{extra}"
        print(line)
        ACCEPTANCE_RESULTS.append(line)

    return tracker


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(line)

BENCH_SEED = 20250807
BENCH_HORIZON = 5000
BENCH_ITERATIONS = 200

NOEXP_PARAMS = ModelParams(4, 0.45, 0.3, uniform_q(4))
EXP_PARAMS = ModelParams(4, 0.65, 0.3, uniform_q(4))

NOEXP_ALGORITHMS = (
    "threshold-sm",
    "threshold-ps",
    "threshold-ucb",
    "polselect-ucb",
    "polselect-ps",
    "polselect-ucb-full",
)


@dataclass
class AlgorithmSummary:
    """Reduction of per-iteration round logs to what the tests assert on."""

    mean_curve: np.ndarray  # mean cumulative pseudo-regret per round
    final: np.ndarray  # per-iteration pseudo-regret at the horizon
    at_mid: np.ndarray  # per-iteration pseudo-regret at round horizon/2
    tau0_rounds: np.ndarray  # per-iteration count of rounds committed to threshold 0
    tau0_at_mid: np.ndarray  # same count restricted to the first horizon/2 rounds
    finish_in_tau0: np.ndarray  # per-iteration jump selections during those rounds
    explored_rounds: np.ndarray  # per-iteration forced-exploration count
    tau_last: np.ndarray  # per-iteration committed threshold in the final round


def _summarize(config: ExperimentConfig, algorithm: str) -> AlgorithmSummary:
    horizon = config.horizon
    total = np.zeros(horizon)
    final, at_mid, tau0, tau0_mid, fin0, expl, tau_last = [], [], [], [], [], [], []
    for iteration in range(config.iterations):
        log = run_iteration_log(config, algorithm, iteration)
        total += log.cum_pseudo
        final.append(log.cum_pseudo[-1])
        at_mid.append(log.cum_pseudo[horizon // 2 - 1])
        mask = log.threshold == 0
        tau0.append(int(mask.sum()))
        tau0_mid.append(int(mask[: horizon // 2].sum()))
        fin0.append(int(log.finish_steps[mask].sum()))
        expl.append(int(log.explored.sum()))
        tau_last.append(int(log.threshold[-1]))
    return AlgorithmSummary(
        mean_curve=total / config.iterations,
        final=np.asarray(final),
        at_mid=np.asarray(at_mid),
        tau0_rounds=np.asarray(tau0),
        tau0_at_mid=np.asarray(tau0_mid),
        finish_in_tau0=np.asarray(fin0),
        explored_rounds=np.asarray(expl),
        tau_last=np.asarray(tau_last),
    )


@pytest.fixture(scope="session")
def bench_noexp() -> dict[str, AlgorithmSummary]:
    """No-exploration-region benchmark, all algorithms."""
    config = ExperimentConfig(
        params=NOEXP_PARAMS,
        horizon=BENCH_HORIZON,
        iterations=BENCH_ITERATIONS,
        algorithms=NOEXP_ALGORITHMS,
        master_seed=BENCH_SEED,
    )
    return {name: _summarize(config, name) for name in NOEXP_ALGORITHMS}


@pytest.fixture(scope="session")
def bench_exp() -> AlgorithmSummary:
    """Exploration-region benchmark, sample-mean threshold learner."""
    config = ExperimentConfig(
        params=EXP_PARAMS,
        horizon=BENCH_HORIZON,
        iterations=BENCH_ITERATIONS,
        algorithms=("threshold-sm",),
        master_seed=BENCH_SEED,
    )
    return _summarize(config, "threshold-sm")
