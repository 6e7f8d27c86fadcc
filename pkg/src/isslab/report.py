"""Run reports and CSV output.

Time series go to one CSV per trajectory with the header
``t,l2,h1,linf,sup_d,sup_f,int_f_l2sq,envelope_<id>...``.  Numbers are
written with ``repr`` so identical runs give byte-identical files.
"""
from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

BASE_COLUMNS = ("t", "l2", "h1", "linf", "sup_d", "sup_f", "int_f_l2sq")


def write_trajectory_csv(path, trajectory, envelopes: Optional[dict] = None) -> Path:
    """One row per time step; ``envelopes`` maps an id to a per-step series."""
    envelopes = envelopes or {}
    cols = [trajectory.times, trajectory.l2, trajectory.h1, trajectory.linf,
            trajectory.sup_d, trajectory.sup_f, trajectory.int_f_l2sq]
    names = list(BASE_COLUMNS)
    for key in sorted(envelopes):
        names.append(f"envelope_{key}")
        cols.append(np.broadcast_to(np.asarray(envelopes[key], float), trajectory.times.shape))
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*cols):
            writer.writerow([repr(float(v)) for v in row])
    return path


def _plain(obj):
    """JSON-friendly echo of dataclasses, tuples and numpy scalars."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            if f.name.startswith("_"):
                continue
            value = getattr(obj, f.name)
            if f.default is not dataclasses.MISSING and _same(value, f.default):
                continue
            out[f.name] = _plain(value)
        return out
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def _same(a, b):
    try:
        return bool(a == b)
    except Exception:  # noqa: BLE001 - arrays and odd types: just echo them
        return False


def scenario_echo(scenario) -> dict:
    out = _plain(scenario)
    out.pop("type", None)
    # keep the plant and discretization visible even when they are defaults
    for key in ("plant", "n_cells", "dt", "t_final", "p", "tolerance"):
        out[key] = _plain(getattr(scenario, key))
    return out


@dataclass
class RunReport:
    scenario: dict
    verdicts: list = field(default_factory=list)
    hypotheses: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    error: Optional[str] = None
    exit_code: int = 0

    @property
    def failed(self) -> list:
        """Ids of verdicts whose claimed envelope is violated."""
        return [v["theorem"] for v in self.verdicts if v["status"] == "fail"]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "verdicts": self.verdicts,
            "hypotheses": self.hypotheses,
            "extras": self.extras,
            "timing": self.timing,
            "outputs": self.outputs,
            "error": self.error,
            "exit_code": self.exit_code,
        }

    def text(self) -> str:
        lines = [f"scenario: {self.scenario.get('name', 'scenario')} (plant {self.scenario.get('plant')})"]
        if self.error:
            lines.append(f"error: {self.error}")
        for v in self.verdicts:
            lines.append(f"  {v['theorem']:<6} {v['status']:<19} max observed/envelope = {v['max_ratio']:.4g}")
            for note in v.get("notes", []):
                lines.append(f"         {note}")
        for h in self.hypotheses:
            lines.append(f"  hypothesis: {h}")
        for key, value in sorted(self.extras.items()):
            lines.append(f"  {key}: {value}")
        if self.timing:
            lines.append("  timing: " + ", ".join(f"{k} {v:.3f}s" for k, v in sorted(self.timing.items())))
        for path in self.outputs:
            lines.append(f"  wrote {path}")
        lines.append(f"exit code {self.exit_code}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(_plain(self.to_dict()), indent=2, sort_keys=True) + "\n")
        (out / "report.txt").write_text(self.text())
