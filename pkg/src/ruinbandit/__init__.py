"""Gambler's-ruin bandit toolkit.

A chain MDP with a goal state, a dead end, and two actions per state: a
random-walk continuation and a direct jump into a terminal state.  The
package provides the exact analytic solution (closed-form policy values,
the threshold-form optimal policy, the explore/no-explore boundary), a
family of online learners, and a Monte Carlo regret harness with a CLI.
"""

from .core import (
    Action,
    ModelParams,
    ParameterError,
    Policy,
    RoundTrace,
    StepCapExceeded,
    TablePolicy,
    ThresholdPolicy,
    run_round,
    sample_initial_state,
    simulate_policy_rounds,
    step,
    uniform_q,
)
from .analytics import (
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
from .learners import (
    BanditMethod,
    Counters,
    Estimator,
    InitScheme,
    Learner,
    OracleLearner,
    PolicyBandit,
    RoundReport,
    ThresholdLearner,
    ThresholdLearnerConfig,
)
from .harness import (
    ExperimentConfig,
    RegretCurve,
    RegretMode,
    SweepConfig,
    SweepResult,
    run_experiment,
    sweep,
)

__version__ = "0.1.0"
