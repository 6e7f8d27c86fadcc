"""Command-line harness.

Subcommands::

    isslab simulate     --config run.ini --out results/
    isslab verify       --config run.ini --out results/ [--theorems T6i,T6ii]
    isslab sweep        --config sweep.ini --out results/ [--jobs 4]
    isslab kernel       [--config run.ini] --out kernels/ [--a -10 --n-cells 128]
    isslab check-lemmas [--seed 0 --trials 1000] [--out lemmas/]

Exit status: 0 success, 2 configuration error, 3 solver failure, 4 a claimed
bound was violated.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import backstepping, bessel, config, inequalities
from ._accel import backend_name
from .errors import ConfigError, ConvergenceError, IsslabError, ParameterError
from .runner import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, EXIT_VERDICT, run
from .signals import Profile


def _theorem_list(text):
    if text is None:
        return None
    return tuple(t.strip() for t in text.replace(";", ",").split(",") if t.strip())


def _config_failure(exc, stream=None):
    stream = stream or sys.stderr
    if isinstance(exc, ConfigError):
        where = f" in {exc.path}" if getattr(exc, "path", None) else ""
        print(f"configuration error{where}:", file=stream)
        for problem in exc.problems:
            print(f"  {problem}", file=stream)
    else:
        print(f"configuration error: {exc}", file=stream)
    return EXIT_CONFIG


def _run_one(scenario, theorems, out, verify_bounds):
    try:
        report = run(scenario, theorems, out, verify_bounds=verify_bounds)
    except ParameterError as exc:
        return _config_failure(exc)
    sys.stdout.write(report.text())
    if report.exit_code == EXIT_SOLVER:
        print(f"solver failure: {report.error}", file=sys.stderr)
    return report.exit_code


def cmd_simulate(args):
    try:
        scenario = config.parse_config(args.config)
    except ConfigError as exc:
        return _config_failure(exc)
    return _run_one(scenario, None, args.out, verify_bounds=False)


def cmd_verify(args):
    try:
        scenario = config.parse_config(args.config)
    except ConfigError as exc:
        return _config_failure(exc)
    return _run_one(scenario, _theorem_list(args.theorems), args.out, verify_bounds=True)


def _sweep_cell(job):
    """Worker: one sweep cell, returns a JSON-friendly summary."""
    index, label, raw, lines, source, theorems, out = job
    cell_dir = Path(out) / f"cell_{index:03d}"
    summary = {"cell": index, "label": label, "dir": cell_dir.name}
    try:
        scenario = config.scenario_from_raw(raw, lines, source)
        report = run(scenario, theorems, cell_dir)
    except (ConfigError, ParameterError) as exc:
        summary.update(exit_code=EXIT_CONFIG, error="; ".join(getattr(exc, "problems", [str(exc)])))
        return summary
    summary.update(
        exit_code=report.exit_code,
        error=report.error,
        verdicts={v["theorem"]: v["status"] for v in report.verdicts},
        max_ratio={v["theorem"]: v["max_ratio"] for v in report.verdicts},
    )
    return summary


def _combine_exit(codes):
    for code in (EXIT_CONFIG, EXIT_SOLVER, EXIT_VERDICT):
        if code in codes:
            return code
    return EXIT_OK


def cmd_sweep(args):
    try:
        raw, lines = config.load_raw(args.config)
        cells = config.sweep_cells(raw, lines, str(args.config))
    except ConfigError as exc:
        return _config_failure(exc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    theorems = _theorem_list(args.theorems)
    jobs = [(i, label, cell, lines, str(args.config), theorems, str(out)) for i, (label, cell) in enumerate(cells)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(job) for job in jobs]
    code = _combine_exit({r["exit_code"] for r in results})
    (out / "summary.json").write_text(json.dumps({"cells": results, "exit_code": code}, indent=2, sort_keys=True) + "\n")
    lines_out = []
    for r in results:
        verdicts = ", ".join(f"{k} {v}" for k, v in r.get("verdicts", {}).items())
        extra = f"  error: {r['error']}" if r.get("error") else ""
        lines_out.append(f"{r['dir']}  [{r['label'] or 'base'}]  exit {r['exit_code']}  {verdicts}{extra}")
    lines_out.append(f"exit code {code}")
    text = "\n".join(lines_out) + "\n"
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return code


def _kernel_inputs(args):
    """(a profile, mu, target_n, n_cells) from an optional config plus flags."""
    a, mu, target_n, n_cells = Profile.constant(0.0), 1.0, 0.0, 128
    if args.config:
        sc = config.parse_config(args.config)
        shift = sc.m * sc.m / (4.0 * sc.mu)
        a = Profile.constant(sc.a.value + shift) if sc.a.kind == "constant" else _shifted(sc.a, shift)
        mu, target_n = sc.mu, sc.target_n
        n_cells = sc.kernel_cells or sc.n_cells
    if args.a is not None:
        a = Profile.constant(args.a)
    if args.mu is not None:
        mu = args.mu
    if args.target_n is not None:
        target_n = args.target_n
    if args.n_cells is not None:
        n_cells = args.n_cells
    return a, mu, target_n, n_cells


def _shifted(profile, shift):
    return lambda y: np.asarray(profile(y), float) + shift


def cmd_kernel(args):
    try:
        a, mu, target_n, n_cells = _kernel_inputs(args)
    except ConfigError as exc:
        return _config_failure(exc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        k = backstepping.solve_kernel(a=a, mu=mu, target_n=target_n, n_cells=n_cells)
        l_ = backstepping.invert_kernel(k)
    except ParameterError as exc:
        return _config_failure(exc)
    except ConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    elapsed = time.perf_counter() - t0
    k.to_csv(out / "kernel_k.csv")
    l_.to_csv(out / "kernel_l.csv")
    summary = {
        "n_cells": n_cells, "mu": mu, "target_n": target_n,
        "max_abs_k": k.max_abs, "max_abs_k_diag": k.max_diag, "max_abs_k_x": k.max_dx,
        "max_abs_l": l_.max_abs, "iterations_k": k.iterations, "iterations_l": l_.iterations,
        "w0_constant": backstepping.w0_constant(k), "lift_constant": backstepping.lift_constant(l_),
        "backend": backend_name(), "seconds": elapsed,
        "files": ["kernel_k.csv", "kernel_l.csv"],
    }
    if isinstance(a, Profile) and a.kind == "constant":
        lam = (target_n - a.value) / mu
        exact = bessel.bessel_kernel_grid(n_cells, lam)
        summary["bessel_max_error"] = float(np.max(np.abs(k.values - exact)))
    (out / "kernel_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for key in sorted(summary):
        print(f"{key}: {summary[key]}")
    return EXIT_OK


def cmd_check_lemmas(args):
    t0 = time.perf_counter()
    res = inequalities.run_battery(n_trials=args.trials, seed=args.seed)
    elapsed = time.perf_counter() - t0
    lines = [f"{name}: {count} checks" for name, count in sorted(res.checks.items())]
    lines.append(f"failures: {res.n_failures}")
    for name, detail in res.failures[:20]:
        lines.append(f"  {name}: {detail}")
    lines.append(f"seed {args.seed}, {args.trials} trials, {elapsed:.2f}s")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "lemmas.txt").write_text(text)
    return EXIT_OK if res.passed else EXIT_VERDICT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isslab", description="ISS envelope verification for 1-D parabolic PDEs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write its time series")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a scenario and check its stability envelopes")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--theorems", help="comma-separated ids, e.g. T6i,T6ii (default: from config)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="verify every cell of the config's [sweep] grid")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--theorems")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("kernel", help="solve and export backstepping kernels")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--a", type=float, help="constant reaction coefficient")
    p.add_argument("--mu", type=float)
    p.add_argument("--target-n", type=float)
    p.add_argument("--n-cells", type=int)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("check-lemmas", help="randomized battery of functional inequalities")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_check_lemmas)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except IsslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
