"""Scenario pipeline: simulate, split, verify, scan and write outputs."""
from __future__ import annotations

import time
from pathlib import Path
from typing import Iterable, Optional

from . import backstepping, degiorgi, envelopes
from .envelopes import DisturbanceSize, make_verdict, params_from_scenario, verify
from .errors import ParameterError, SolverError, StepSizeError
from .report import RunReport, scenario_echo, write_trajectory_csv
from .scenario import THEOREMS, Scenario
from .solvers import simulate
from .splitting import DEFAULT_PLACEMENT, simulate_split, split

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERDICT = 0, 2, 3, 4

# which trajectory each bound is checked on: (split placement or None, subsystem)
_TARGETS = {
    "T6i": (None, "full"), "T6ii": (None, "full"),
    "T11i": (None, "full"), "T11ii": (None, "full"),
    "T7": ("v", "w"), "T7x": ("v", "w"), "T8": ("v", "w"), "T9": ("v", "v"),
    "T12": ("v", "w"), "T13": ("v", "v"),
    "T15": ("w", "w"), "T16": ("w", "v"),
}


def _table_notes(scenario):
    notes = []
    for label, sig in (("d", scenario.d), ("f", scenario.f), ("u0", scenario.u0)):
        if getattr(sig, "kind", None) == "table" or (label == "d" and not sig.is_c2):
            notes.append(f"{label} is table data: only approximately C2; bounds assume smooth data")
    return notes


def _resolve(scenario: Scenario, theorems: Optional[Iterable[str]]):
    ths = tuple(theorems) if theorems is not None else scenario.requested_theorems
    unknown = [t for t in ths if t not in THEOREMS]
    if unknown:
        raise ParameterError(f"unknown theorem id(s): {', '.join(unknown)}")
    plant = scenario.plant
    allowed = {
        "transport": envelopes.TRANSPORT_THEOREMS,
        "burgers": envelopes.BURGERS_THEOREMS,
        "reaction": (),
        "closed_loop": ("CL",),
    }[plant]
    wrong = [t for t in ths if t not in allowed]
    if wrong:
        raise ParameterError(f"{', '.join(wrong)} do not apply to the {plant} plant")
    return ths


def run(scenario: Scenario, theorems: Optional[Iterable[str]] = None, out_dir=None,
        verify_bounds: bool = True) -> RunReport:
    """Run the full pipeline for one scenario and return its report.

    Solver failures are caught and reported with exit code 3; any claimed
    bound that is violated gives exit code 4.
    """
    t_start = time.perf_counter()
    report = RunReport(scenario=scenario_echo(scenario))
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    ths = _resolve(scenario, theorems) if verify_bounds else ()
    report.hypotheses.extend(_table_notes(scenario))
    try:
        if scenario.plant == "closed_loop":
            _run_closed_loop(scenario, ths, report, out)
        else:
            _run_open_loop(scenario, ths, report, out)
    except SolverError as exc:
        report.error = str(exc)
        if isinstance(exc, StepSizeError):
            report.error += "; advisory: the explicit convection term limits the time step (CFL guard)"
        report.exit_code = EXIT_SOLVER
    else:
        report.exit_code = EXIT_VERDICT if report.failed else EXIT_OK
    report.timing["total"] = time.perf_counter() - t_start
    if out is not None:
        report.write(out)
    return report


def _scaled(verdict, scale):
    if scale == 1.0:
        return verdict
    return make_verdict(verdict.theorem_id, verdict.times, scale * verdict.envelope_values,
                        verdict.observed_values, verdict.rel_tol, verdict.abs_tol,
                        verdict.hypothesis_met, verdict.notes + [f"envelope scaled by {scale:g}"])


def _csv(report, out, name, trajectory, envs):
    if out is None:
        return
    path = write_trajectory_csv(out / f"{name}.csv", trajectory, envs)
    report.outputs.append(path.name)


def _run_open_loop(scenario, ths, report, out):
    t0 = time.perf_counter()
    full = simulate(scenario)
    report.timing["simulate"] = time.perf_counter() - t0
    params = params_from_scenario(scenario)
    tol = scenario.tolerance
    sizes = DisturbanceSize.of(full)
    envs = {"full": {}}
    trajs = {"full": full}
    pairs = {}

    def subsystem(placement, which):
        if placement not in pairs:
            t1 = time.perf_counter()
            pairs[placement] = simulate_split(split(scenario, placement))
            report.timing[f"split_{placement}"] = time.perf_counter() - t1
        w, v = pairs[placement]
        key = which if placement == _default_placement(scenario) else f"{which}_{placement}"
        trajs[key] = w if which == "w" else v
        envs.setdefault(key, {})
        return key, trajs[key]

    for th in ths:
        placement, which = _TARGETS[th]
        if placement is None:
            key, traj = "full", full
        else:
            key, traj = subsystem(placement, which)
        verdict = _scaled(verify(traj, th, params, rel_tol=tol, hypothesis_stats=sizes), scenario.envelope_scale)
        envs[key][th] = verdict.envelope_values
        summary = verdict.summary()
        summary["trajectory"] = key
        report.verdicts.append(summary)
        for note in verdict.notes:
            if ("satisfied" in note or "not met" in note) and note not in report.hypotheses:
                report.hypotheses.append(note)
        if th == "T9":
            cert = degiorgi.certify_trajectory(traj, scenario.p)
            report.extras["level_set"] = {
                "certified_upper": cert.upper_bound,
                "certified_lower": cert.lower_bound,
                "observed_max": cert.observed_max,
                "observed_min": cert.observed_min,
                "phi_at_upper_level": cert.upper.phi_at_conclusion,
                "phi_at_lower_level": cert.lower.phi_at_conclusion,
                "cell": cert.upper.cell,
                "conclusion_holds": cert.passed,
            }
    name = scenario.name
    for key, traj in trajs.items():
        _csv(report, out, name if key == "full" else f"{name}_{key}", traj, envs.get(key))


def _default_placement(scenario):
    return DEFAULT_PLACEMENT.get(scenario.plant)


def _run_closed_loop(scenario, ths, report, out):
    t0 = time.perf_counter()
    u, w, res = backstepping.run_closed_loop_scenario(scenario)
    report.timing["closed_loop"] = time.perf_counter() - t0
    report.extras["kernel"] = {
        "max_abs_k": res.kernel.max_abs,
        "max_abs_k_diag": res.kernel.max_diag,
        "max_abs_l": res.inverse.max_abs,
        "iterations_k": res.kernel.iterations,
        "iterations_l": res.inverse.iterations,
    }
    envs_u, envs_w = {}, {}
    if "CL" in ths:
        verdicts = backstepping.verify_closed_loop_iss(
            u, w, res.kernel, res.inverse, scenario.mu, scenario.target_n, scenario.p, scenario.m,
            rel_tol=max(scenario.tolerance, backstepping.CL_TOL),
        )
        verdicts = {vid: _scaled(v, scenario.envelope_scale) for vid, v in verdicts.items()}
        for vid, verdict in verdicts.items():
            summary = verdict.summary()
            summary["trajectory"] = "u" if vid == "CL-u" else "target"
            report.verdicts.append(summary)
        envs_w["CL-w"] = verdicts["CL-w"].envelope_values
        envs_u["CL-u"] = verdicts["CL-u"].envelope_values
    _csv(report, out, scenario.name, u, envs_u)
    _csv(report, out, f"{scenario.name}_target", w, envs_w)
