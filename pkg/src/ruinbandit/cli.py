"""Command-line surface: solve / simulate / sweep / verify.

Configuration comes from an INI-style file (sections [model],
[experiment], [sweep]) or from a JSON sidecar written by a previous run;
flags override file values.  Every run writes its fully resolved
configuration back out as a JSON sidecar so it can be reproduced exactly.

Exit codes: 0 ok, 1 verification failure, 2 invalid input, 3 runtime
abort (step cap).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from . import analytics, harness
from .core import ModelParams, ParameterError, StepCapExceeded, ThresholdPolicy, uniform_q
from .harness import ExperimentConfig, RegretMode, SweepConfig
from .learners import InitScheme

__all__ = ["main", "build_parser", "solve_report"]

DEFAULT_SEED = 0
DEFAULT_BENCHMARK_ALGORITHMS = (
    "threshold-sm",
    "threshold-ps",
    "threshold-ucb",
    "polselect-ucb",
    "polselect-ps",
)


# ---------------------------------------------------------------------------
# config file handling


def _read_config(path: str) -> dict:
    text = Path(path).read_text()
    if Path(path).suffix == ".json" or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ParameterError(f"config file {path} must hold a JSON object")
        return data
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"config file {path} is not valid INI: {exc}") from None
    return {section: dict(parser.items(section)) for section in parser.sections()}


def _as_float(value) -> float:
    return float(value)


def _as_int(value) -> int:
    return int(str(value))


def _as_list(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [part.strip() for part in str(value).split(",") if part.strip()]


def _parse_q(value, goal: int) -> tuple[float, ...]:
    if value is None or (isinstance(value, str) and value.strip() == "uniform"):
        return uniform_q(goal)
    if isinstance(value, str):
        return tuple(float(part) for part in _as_list(value))
    return tuple(float(v) for v in value)


def _parse_grid(value) -> tuple[float, ...]:
    """Grid syntax: start:stop:count or a comma list of values."""
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    text = str(value).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParameterError(f"grid must be start:stop:count or a comma list, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ParameterError(f"grid count must be >= 1, got {count}")
        return tuple(float(x) for x in np.linspace(start, stop, count))
    return tuple(float(part) for part in _as_list(text))


def _resolve_params(file_cfg: dict, args) -> ModelParams:
    model = file_cfg.get("model", {})
    goal = args.G if args.G is not None else _as_int(model.get("goal", 4))
    p_c = args.p_c if args.p_c is not None else _as_float(model.get("p_c", 0.45))
    p_f = args.p_f if args.p_f is not None else _as_float(model.get("p_f", 0.3))
    q = _parse_q(args.q if args.q is not None else model.get("q"), goal)
    return ModelParams(goal, p_c, p_f, q)


def _resolve_experiment(file_cfg: dict, args) -> ExperimentConfig:
    exp = file_cfg.get("experiment", {})
    params = _resolve_params(file_cfg, args)
    algorithms = (
        tuple(_as_list(args.algorithms))
        if args.algorithms is not None
        else tuple(_as_list(exp.get("algorithms", list(DEFAULT_BENCHMARK_ALGORITHMS))))
    )
    return ExperimentConfig(
        params=params,
        horizon=args.T if args.T is not None else _as_int(exp.get("horizon", 5000)),
        iterations=(
            args.iterations if args.iterations is not None else _as_int(exp.get("iterations", 200))
        ),
        algorithms=algorithms,
        master_seed=args.seed if args.seed is not None else _as_int(exp.get("seed", DEFAULT_SEED)),
        regret_mode=RegretMode(args.mode if args.mode is not None else exp.get("mode", "pseudo")),
        gamma=args.gamma if args.gamma is not None else _as_float(exp.get("gamma", 15.0)),
        init=InitScheme(args.init if args.init is not None else exp.get("init", "random-unit")),
    )


def _resolve_sweep(file_cfg: dict, args) -> SweepConfig:
    sw = file_cfg.get("sweep", {})
    model = file_cfg.get("model", {})
    goal = args.G if args.G is not None else _as_int(model.get("goal", 4))
    q_raw = args.q if args.q is not None else model.get("q")
    return SweepConfig(
        goal=goal,
        p_c_values=_parse_grid(
            args.p_c_grid if args.p_c_grid is not None else sw.get("p_c_grid", "0.1:0.9:9")
        ),
        p_f_values=_parse_grid(
            args.p_f_grid if args.p_f_grid is not None else sw.get("p_f_grid", "0.1:0.9:9")
        ),
        horizon=args.T if args.T is not None else _as_int(sw.get("horizon", 1000)),
        iterations=(
            args.iterations if args.iterations is not None else _as_int(sw.get("iterations", 50))
        ),
        algorithm=args.algorithm if args.algorithm is not None else sw.get("algorithm", "threshold-sm"),
        master_seed=args.seed if args.seed is not None else _as_int(sw.get("seed", DEFAULT_SEED)),
        q=None if q_raw is None else _parse_q(q_raw, goal),
        regret_mode=RegretMode(args.mode if args.mode is not None else sw.get("mode", "pseudo")),
        gamma=args.gamma if args.gamma is not None else _as_float(sw.get("gamma", 15.0)),
        init=InitScheme(args.init if args.init is not None else sw.get("init", "random-unit")),
    )


# ---------------------------------------------------------------------------
# solve


def solve_report(params: ModelParams) -> dict:
    """Everything the exact solution layer knows about one instance."""
    tau, region = analytics.optimal_threshold(params)
    gaps = analytics.gap_report(params)
    p_continue, p_finish = analytics.hitting_probabilities(params)
    values0, scalar0 = analytics.policy_value(ThresholdPolicy(0), params)
    values1, scalar1 = analytics.policy_value(ThresholdPolicy(1), params)
    return {
        "model": {
            "goal": params.goal,
            "p_c": params.p_c,
            "p_f": params.p_f,
            "q": list(params.q),
        },
        "optimal_threshold": tau,
        "region": region.value,
        "boundary": analytics.boundary(params.p_c, params.goal),
        "value_threshold0": [float(v) for v in values0],
        "value_threshold1": [float(v) for v in values1],
        "scalar_threshold0": scalar0,
        "scalar_threshold1": scalar1,
        "optimal_value": max(scalar0, scalar1),
        "delta_s": list(gaps.delta_s),
        "delta_max": gaps.delta_max,
        "delta_boundary": gaps.delta_boundary,
        "p_continue_given_threshold1": p_continue,
        "p_finish_given_threshold1": p_finish,
    }


def _print_solve_report(report: dict) -> None:
    model = report["model"]
    q_text = ", ".join(f"{w:.6g}" for w in model["q"])
    print(f"instance: goal={model['goal']}  p_c={model['p_c']:g}  p_f={model['p_f']:g}  q=({q_text})")
    print(f"optimal threshold: {report['optimal_threshold']}   region: {report['region']}")
    print(
        f"boundary at p_c: {report['boundary']:.9f}   "
        f"distance to boundary curve: {report['delta_boundary']:.9f}"
    )
    goal = model["goal"]
    states = list(range(1, goal))
    rows = [
        ("state", [f"{s}" for s in states]),
        ("value tau=0", [f"{report['value_threshold0'][s]:.9f}" for s in states]),
        ("value tau=1", [f"{report['value_threshold1'][s]:.9f}" for s in states]),
        ("gap", [f"{d:.9f}" for d in report["delta_s"]]),
    ]
    width = max(len(cell) for _, cells in rows for cell in cells)
    for label, cells in rows:
        print(f"{label:>14}  " + "  ".join(cell.rjust(width) for cell in cells))
    print(f"delta_max: {report['delta_max']:.9f}")
    print(
        f"scalar values: tau=0 {report['scalar_threshold0']:.9f}  "
        f"tau=1 {report['scalar_threshold1']:.9f}  optimal {report['optimal_value']:.9f}"
    )
    print(
        "action use under tau=1: "
        f"walk {report['p_continue_given_threshold1']:.9f}  "
        f"jump {report['p_finish_given_threshold1']:.9f}"
    )


def _cmd_solve(args) -> int:
    file_cfg = _read_config(args.config) if args.config else {}
    params = _resolve_params(file_cfg, args)
    report = solve_report(params)
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        _print_solve_report(report)
    return 0


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args) -> int:
    file_cfg = _read_config(args.config) if args.config else {}
    config = _resolve_experiment(file_cfg, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    curves = harness.run_experiment(config)
    csv_path = harness.write_regret_csv(curves, out_dir / "regret.csv")
    outputs = {"csv": csv_path.name}
    if not args.no_figures:
        from . import plotting

        fig_path = plotting.regret_figure(
            curves,
            out_dir / "regret.png",
            title=(
                f"goal={config.params.goal} p_c={config.params.p_c:g} "
                f"p_f={config.params.p_f:g} ({config.regret_mode.value} regret)"
            ),
        )
        outputs["figure"] = fig_path.name
    sidecar = {"command": "simulate", **harness.config_to_dict(config), "outputs": outputs}
    harness.write_sidecar(sidecar, out_dir / "regret.json")
    print(f"wrote {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# sweep


def _sweep_to_dict(config: SweepConfig) -> dict:
    return {
        "model": {"goal": config.goal, "q": None if config.q is None else list(config.q)},
        "sweep": {
            "p_c_grid": list(config.p_c_values),
            "p_f_grid": list(config.p_f_values),
            "horizon": config.horizon,
            "iterations": config.iterations,
            "algorithm": config.algorithm,
            "seed": config.master_seed,
            "mode": config.regret_mode.value,
            "gamma": config.gamma,
            "init": config.init.value,
        },
    }


def _cmd_sweep(args) -> int:
    file_cfg = _read_config(args.config) if args.config else {}
    config = _resolve_sweep(file_cfg, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    result = harness.sweep(config)
    csv_path = harness.write_sweep_csv(result, out_dir / "sweep.csv")
    outputs = {"csv": csv_path.name}
    if not args.no_figures:
        from . import plotting

        fig_path = plotting.sweep_figure(result, out_dir / "sweep.png")
        outputs["figure"] = fig_path.name
    sidecar = {"command": "sweep", **_sweep_to_dict(config), "outputs": outputs}
    harness.write_sidecar(sidecar, out_dir / "sweep.json")
    print(f"wrote {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# verify


def _cmd_verify(args) -> int:
    if args.G_min < 2 or args.G_max < args.G_min:
        raise ParameterError("need 2 <= G-min <= G-max")
    density = args.grid_density
    if density < 1:
        raise ParameterError("grid density must be >= 1")
    values = [i / (density + 1) for i in range(1, density + 1)]
    worst = 0.0
    worst_at = None
    for goal in range(args.G_min, args.G_max + 1):
        goal_worst = 0.0
        for p_c in values:
            for p_f in values:
                params = ModelParams(goal, p_c, p_f, uniform_q(goal))
                _, best_value = analytics.optimal_by_enumeration(params)
                tau, _ = analytics.optimal_threshold(params)
                if args.self_test_bug:
                    tau = 1 - tau  # negative control: deliberately wrong rule
                _, rule_value = analytics.policy_value(ThresholdPolicy(tau), params)
                gap = best_value - rule_value
                if gap > goal_worst:
                    goal_worst = gap
                if gap > worst:
                    worst, worst_at = gap, (goal, p_c, p_f)
        print(f"goal={goal}  cells={len(values) ** 2}  max discrepancy={goal_worst:.3e}")
    if worst <= args.tolerance:
        print(f"verify: PASS (max discrepancy {worst:.3e} <= {args.tolerance:g})")
        return 0
    print(
        f"verify: FAIL (max discrepancy {worst:.3e} > {args.tolerance:g} "
        f"at goal={worst_at[0]} p_c={worst_at[1]:g} p_f={worst_at[2]:g})"
    )
    return 1


# ---------------------------------------------------------------------------
# parser


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--G", type=int, default=None, help="goal state index (>= 2)")
    parser.add_argument("--p-c", dest="p_c", type=float, default=None, help="walk up-move probability")
    parser.add_argument("--p-f", dest="p_f", type=float, default=None, help="jump success probability")
    parser.add_argument("--q", default=None, help="initial-state weights: 'uniform' or comma list")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--T", type=int, default=None, help="rounds per iteration")
    parser.add_argument("--iterations", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--gamma", type=float, default=None, help="forced-exploration coefficient")
    parser.add_argument("--init", choices=[s.value for s in InitScheme], default=None)
    parser.add_argument("--mode", choices=[m.value for m in RegretMode], default=None)
    parser.add_argument("--out-dir", default=".", help="output directory")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruinbandit",
        description="Gambler's-ruin bandit: exact solution, online learners, regret benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="exact solution report for one instance")
    p_solve.add_argument("--config", default=None)
    _add_model_flags(p_solve)
    p_solve.add_argument("--json", action="store_true", help="emit the report as JSON")
    p_solve.set_defaults(func=_cmd_solve)

    p_sim = sub.add_parser("simulate", help="run the regret benchmark and write CSV + figure")
    p_sim.add_argument("--config", default=None)
    _add_model_flags(p_sim)
    _add_run_flags(p_sim)
    p_sim.add_argument("--algorithms", default=None, help="comma list of algorithm names")
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="grid sweep over (p_c, p_f)")
    p_sweep.add_argument("--config", default=None)
    p_sweep.add_argument("--G", type=int, default=None)
    p_sweep.add_argument("--q", default=None)
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--algorithm", default=None)
    p_sweep.add_argument("--p-c-grid", dest="p_c_grid", default=None, help="start:stop:count or comma list")
    p_sweep.add_argument("--p-f-grid", dest="p_f_grid", default=None, help="start:stop:count or comma list")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser(
        "verify", help="check the threshold rule against exhaustive policy enumeration"
    )
    p_verify.add_argument("--G-min", dest="G_min", type=int, default=2)
    p_verify.add_argument("--G-max", dest="G_max", type=int, default=8)
    p_verify.add_argument("--grid-density", type=int, default=9)
    p_verify.add_argument("--tolerance", type=float, default=1e-10)
    p_verify.add_argument(
        "--self-test-bug",
        action="store_true",
        help="flip the decision rule to prove the check catches a broken rule",
    )
    p_verify.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StepCapExceeded as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
