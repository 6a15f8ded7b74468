"""Command line entry point: ``mtdispatch {run,compare,oracle,validate-scenario}``.

Output layout of ``run``::

    <output_dir>/<algorithm>/
        config.yaml        resolved RunConfig
        metrics.csv        algorithm,metric,mean,std,best,worst,runs
        plot_data.json     one scatter series per run
        run_000/front.csv  f1,f2,cv,<genes>
        run_000/schedule.csv
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np
import yaml

from . import metrics, oracle
from .config import ALGORITHMS, ConfigError, RunConfig, load_config
from .model import VARIABLES, DispatchProblem, Scenario, ScenarioError, split
from .multitask import RunResult, run
from .scenario import default_scenario_path, load_scenario

OUTPUT_ENV = "MTDISPATCH_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2
FLOAT = "%.17g"
METRIC_HEADER = ("algorithm", "metric", "mean", "std", "best", "worst", "runs")


class UsageError(Exception):
    pass


def gene_names(T: int) -> list[str]:
    return [f"{name}[{t}]" for name in VARIABLES for t in range(T)]


# --------------------------------------------------------------------------- files

def write_front(path: Path, result: RunResult, T: int) -> None:
    header = ["f1", "f2", "cv", *gene_names(T)]
    table = np.column_stack([result.F, result.CV, result.X]) if len(result.X) else np.empty((0, len(header)))
    np.savetxt(path, table, delimiter=",", header=",".join(header), comments="", fmt=FLOAT)


def read_front(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(F, cv, X)`` from a front CSV."""
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.size == 0:
        return np.empty((0, 2)), np.empty(0), np.empty((0, 0))
    return table[:, :2], table[:, 2], table[:, 3:]


def best_member(F: np.ndarray, cv: np.ndarray) -> int:
    """Compromise pick: lowest CV, then smallest sum of range-normalized objectives."""
    pool = np.flatnonzero(cv == cv.min())
    Fp = F[pool]
    span = np.where(np.ptp(Fp, axis=0) > 0, np.ptp(Fp, axis=0), 1.0)
    score = ((Fp - Fp.min(axis=0)) / span).sum(axis=1)
    return int(pool[np.argmin(score)])


def write_schedule(path: Path, x: np.ndarray, T: int) -> None:
    parts = split(x, T)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *VARIABLES])
        for t in range(T):
            w.writerow([t, *(FLOAT % parts[name][t] for name in VARIABLES)])


def write_metrics(path: Path, rows: list[tuple[str, str, metrics.RunStats]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_HEADER)
        for algorithm, name, st in rows:
            w.writerow([algorithm, name, FLOAT % st.mean, FLOAT % st.std, FLOAT % st.best, FLOAT % st.worst, st.runs])


def score_runs(fronts: list[np.ndarray], feasible: list[bool], ref: metrics.ReferenceSet | None):
    """Per-run IGD and HV; infeasible runs score IGD = inf and HV = 0."""
    igds, hvs = [], []
    for F, ok in zip(fronts, feasible):
        if ok and ref is not None:
            igds.append(metrics.igd(F, ref))
            hvs.append(metrics.hv_normalized(F, ref))
        else:
            igds.append(float("inf"))
            hvs.append(0.0)
    return igds, hvs


def stats_rows(algorithm: str, igds, hvs) -> list[tuple[str, str, metrics.RunStats]]:
    return [
        (algorithm, "IGD", metrics.RunStats.of(igds, higher_is_better=False)),
        (algorithm, "HV", metrics.RunStats.of(hvs, higher_is_better=True)),
    ]


# --------------------------------------------------------------------------- commands

def _scenario(path: str | None) -> Scenario:
    try:
        return load_scenario(path or default_scenario_path())
    except (OSError, ScenarioError, ValueError, KeyError) as exc:
        raise UsageError(f"scenario: {exc}") from None


def _config(args) -> RunConfig:
    overrides = {}
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    try:
        cfg = load_config(args.config, **overrides)
        if "output_dir" not in overrides and os.environ.get(OUTPUT_ENV):
            from_file = load_config(args.config).output_dir != RunConfig.output_dir if args.config else False
            if not from_file:
                cfg = cfg.replace(output_dir=os.environ[OUTPUT_ENV])
        return cfg
    except OSError as exc:
        raise UsageError(f"config: {exc}") from None


def cmd_run(args) -> int:
    cfg = _config(args)
    scenario = _scenario(args.scenario)
    problem = DispatchProblem(scenario, cfg.tau_eq, cfg.terminal_soc, cfg.balance_repair)
    out = Path(cfg.output_dir) / cfg.algorithm
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.yaml", "w") as fh:
        yaml.safe_dump({**cfg.to_dict(), "scenario": str(args.scenario or default_scenario_path())}, fh, sort_keys=False)

    fronts, feasible, series = [], [], []
    for k in range(cfg.runs):
        seed = cfg.seed + k
        result = run(scenario, cfg.replace(seed=seed), problem)
        run_dir = out / f"run_{k:03d}"
        run_dir.mkdir(exist_ok=True)
        write_front(run_dir / "front.csv", result, scenario.T)
        write_schedule(run_dir / "schedule.csv", result.X[best_member(result.F, result.CV)], scenario.T)
        fronts.append(result.F)
        feasible.append(result.feasible)
        series.append({"run": k, "seed": seed, "feasible": result.feasible,
                       "f1": result.F[:, 0].tolist(), "f2": result.F[:, 1].tolist()})
        if not args.quiet:
            print(f"run {k} seed {seed}: {len(result.F)} points, feasible={result.feasible}, "
                  f"{result.seconds:.1f}s", file=sys.stderr)

    ok = [F for F, f in zip(fronts, feasible) if f]
    ref = metrics.build_reference(ok) if ok else None
    igds, hvs = score_runs(fronts, feasible, ref)
    write_metrics(out / "metrics.csv", stats_rows(cfg.algorithm, igds, hvs))
    with open(out / "plot_data.json", "w") as fh:
        json.dump({"x": "f1", "y": "f2", "algorithm": cfg.algorithm, "series": series}, fh)
    print(out)
    return EXIT_OK if all(feasible) else EXIT_INFEASIBLE


def load_batch(path: Path) -> tuple[str, list[np.ndarray], list[bool]]:
    cfg_file = path / "config.yaml"
    if not cfg_file.exists():
        raise UsageError(f"{path}: not a run directory (config.yaml missing)")
    algorithm = yaml.safe_load(cfg_file.read_text()).get("algorithm", path.name)
    fronts, feasible = [], []
    for run_dir in sorted(path.glob("run_*")):
        F, cv, _ = read_front(run_dir / "front.csv")
        ok = len(cv) > 0 and bool(np.all(cv <= 0.0))
        fronts.append(F)
        feasible.append(ok)
    if not fronts:
        raise UsageError(f"{path}: no run_* directories")
    return algorithm, fronts, feasible


def cmd_compare(args) -> int:
    batches = [load_batch(Path(p)) for p in args.dirs]
    ok = [F for _, fronts, feas in batches for F, f in zip(fronts, feas) if f]
    if not ok:
        raise UsageError("no feasible front in any run directory")
    ref = metrics.build_reference(ok)
    rows = []
    for algorithm, fronts, feas in batches:
        rows += stats_rows(algorithm, *score_runs(fronts, feas, ref))
    target = Path(args.out) if args.out else None
    if target:
        write_metrics(target, rows)
        print(target)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(METRIC_HEADER)
        for algorithm, name, st in rows:
            w.writerow([algorithm, name, FLOAT % st.mean, FLOAT % st.std, FLOAT % st.best, FLOAT % st.worst, st.runs])
    return EXIT_OK


def cmd_oracle(args) -> int:
    cases = oracle.micro_scenarios()
    names = list(cases) if args.name == "all" else [args.name]
    code = EXIT_OK
    for name in names:
        ms = cases[name]
        X, F = oracle.pareto_oracle(ms)
        tol = oracle.grid_step_tolerance(ms)
        line = f"{name}: grid {oracle.grid_size(ms)} points, front {len(F)}, step tolerance {tol:.4g}"
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            header = ["f1", "f2", *gene_names(ms.scenario.T)]
            np.savetxt(Path(args.out) / f"{name}_front.csv", np.column_stack([F, X]), delimiter=",",
                       header=",".join(header), comments="", fmt=FLOAT)
        if args.solve:
            cfg = RunConfig(pop_size=args.pop_size, generations=args.generations, runs=1)
            scores = []
            for seed in range(args.seeds):
                result = run(ms.scenario, cfg.replace(seed=seed))
                verified = result.feasible and bool(oracle.is_feasible(ms.scenario, result.X, ms.tau_eq).all())
                scores.append(metrics.igd(result.F, F) if verified else float("inf"))
            worst = max(scores)
            line += f", solver IGD worst {worst:.4g} ({'ok' if worst <= tol else 'FAIL'})"
            if worst > tol:
                code = EXIT_INFEASIBLE
        print(line)
    return code


def cmd_validate(args) -> int:
    s = _scenario(args.path)
    print(f"{args.path}: T={s.T}, genes={s.n_genes}, peak loads "
          f"elec {s.p_load.max():g} heat {s.h_load.max():g} cool {s.q_load.max():g} kW")
    return EXIT_OK


# --------------------------------------------------------------------------- parser

def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mtdispatch", description="Multi-task DE for coal-mine energy dispatch.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="seeded batch of solver runs")
    r.add_argument("--scenario", help="scenario YAML (default: shipped 24-hour scenario)")
    r.add_argument("--config", help="YAML or JSON run configuration")
    r.add_argument("--pop-size", dest="pop_size", type=int)
    r.add_argument("--generations", type=int)
    r.add_argument("--runs", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--algorithm", choices=ALGORITHMS)
    r.add_argument("--transfer-fraction", dest="transfer_fraction", type=float)
    r.add_argument("--nr", type=int, help="neighbourhood size")
    r.add_argument("--cr", type=float, help="crossover rate")
    r.add_argument("--f-pool", dest="f_pool", type=_floats, help="scale factors, e.g. 0.6,0.8,1.0")
    r.add_argument("--epsilon0-policy", dest="epsilon0_policy", help="median, max or fixed:<value>")
    r.add_argument("--cp", type=float)
    r.add_argument("--g-cut", dest="g_cut", type=float)
    r.add_argument("--tau-eq", dest="tau_eq", type=float)
    r.add_argument("--terminal-soc", dest="terminal_soc", action=argparse.BooleanOptionalAction, default=None)
    r.add_argument("--balance-repair", dest="balance_repair", action=argparse.BooleanOptionalAction, default=None)
    r.add_argument("--output-dir", dest="output_dir", help=f"default: ${OUTPUT_ENV} or ./results")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="shared-reference IGD/HV across run directories")
    c.add_argument("dirs", nargs="+", help="directories written by `run`")
    c.add_argument("--out", help="CSV path (default: stdout)")
    c.set_defaults(func=cmd_compare)

    o = sub.add_parser("oracle", help="brute-force fronts of the built-in micro-scenarios")
    o.add_argument("name", nargs="?", default="all", choices=["all", *oracle.micro_scenarios()])
    o.add_argument("--out", help="directory for oracle front CSVs")
    o.add_argument("--solve", action="store_true", help="also run the solver and report IGD")
    o.add_argument("--pop-size", dest="pop_size", type=int, default=40)
    o.add_argument("--generations", type=int, default=300)
    o.add_argument("--seeds", type=int, default=5)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("validate-scenario", help="parse and check a scenario file")
    v.add_argument("path")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
