"""INI scenario files.

A scenario file has flat sections::

    [scenario]        plant, mu, m, n, nu, target_n, name, compatible_u0
    [discretization]  n_cells, dt, t_final, snapshot_stride, kernel_cells
    [verification]    theorems, p, epsilon, tolerance, envelope_scale
    [u0] [a]          profile: kind plus that kind's parameters
    [d]               boundary signal: kind plus parameters
    [f]               field signal: kind plus parameters; nested profile and
                      time signal parameters carry ``profile_`` / ``time_``
                      prefixes, e.g. ``profile = sine_mode``,
                      ``profile_amplitude = 0.5``, ``time = sinusoid``
    [sweep]           optional Cartesian grid: ``section.key = v1, v2, ...``;
                      keys joined with ``+`` move together

Every problem found is reported, each with its line number when it can be
attributed to one.
"""
from __future__ import annotations

import configparser
import itertools
import re
from pathlib import Path

from .errors import ConfigError
from .scenario import Scenario
from .signals import BoundarySignal, FieldSignal, Profile

SECTIONS = ("scenario", "discretization", "verification", "u0", "a", "d", "f", "sweep")

_FLOAT, _INT, _BOOL, _STR = float, int, bool, str
SCALAR_KEYS = {
    "scenario": {"plant": _STR, "mu": _FLOAT, "m": _FLOAT, "n": _FLOAT, "nu": _FLOAT,
                 "target_n": _FLOAT, "name": _STR, "compatible_u0": _BOOL},
    "discretization": {"n_cells": _INT, "dt": _FLOAT, "t_final": _FLOAT,
                       "snapshot_stride": _INT, "kernel_cells": _INT},
    "verification": {"theorems": _STR, "p": _FLOAT, "epsilon": _FLOAT, "tolerance": _FLOAT,
                     "envelope_scale": _FLOAT},
}

PROFILE_KEYS = {
    "zero": (),
    "constant": ("value",),
    "polynomial": ("coeffs",),
    "sine_mode": ("amplitude", "mode", "slope"),
    "table": ("samples",),
}
BOUNDARY_KEYS = {
    "zero": (),
    "constant": ("value",),
    "sinusoid": ("amplitude", "frequency", "phase", "offset"),
    "decaying_sinusoid": ("amplitude", "frequency", "decay", "phase", "offset"),
    "table": ("samples", "sample_period"),
}
FIELD_KEYS = {"zero", "separable", "traveling", "table"}

_KEY_RE = re.compile(r"^\s*([^=:\s;#\[][^=:]*?)\s*[=:]")
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")


def _line_index(text: str) -> dict:
    """(section, key) -> line number, from the raw file text."""
    out, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            out[(section, None)] = lineno
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            out[(section, m.group(1).strip().lower())] = lineno
    return out


class _Reader:
    """Typed access to raw sections that collects problems instead of raising."""

    def __init__(self, raw: dict, lines: dict):
        self.raw, self.lines, self.problems = raw, lines, []
        self.used = set()

    def where(self, section, key=None):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        return f"line {line}: " if line else ""

    def error(self, section, key, msg):
        self.problems.append(f"{self.where(section, key)}[{section}] {key}: {msg}" if key
                             else f"{self.where(section)}[{section}] {msg}")

    def get(self, section, key, kind, default=None):
        sec = self.raw.get(section, {})
        if key not in sec or sec[key].strip() == "":
            self.used.add((section, key))
            return default
        self.used.add((section, key))
        text = sec[key].strip()
        try:
            if kind is bool:
                low = text.lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError(text)
            if kind is int:
                value = float(text)
                if value != int(value):
                    raise ValueError(text)
                return int(value)
            return kind(text)
        except ValueError:
            self.error(section, key, f"cannot read {text!r} as {kind.__name__}")
            return default

    def get_list(self, section, key, default=()):
        text = self.get(section, key, str)
        if text is None:
            return default
        try:
            return tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)
        except ValueError:
            self.error(section, key, f"expected a list of numbers, got {text!r}")
            return default

    def get_table(self, section, key):
        text = self.get(section, key, str)
        if text is None:
            return ()
        try:
            return tuple(tuple(float(v) for v in row.replace(",", " ").split()) for row in text.split(";") if row.strip())
        except ValueError:
            self.error(section, key, "expected rows of numbers separated by ';'")
            return ()


def _profile(r: _Reader, section: str, prefix: str = "", default=None):
    kind_key = prefix.rstrip("_") if prefix else "kind"
    kind = r.get(section, kind_key, str)
    if kind is None:
        return default if default is not None else Profile.zero()
    kind = kind.lower()
    if kind not in PROFILE_KEYS:
        r.error(section, kind_key, f"unknown profile kind {kind!r}; expected one of {', '.join(PROFILE_KEYS)}")
        return Profile.zero()
    k = lambda name: prefix + name  # noqa: E731
    if kind == "zero":
        return Profile.zero()
    if kind == "constant":
        return Profile.constant(r.get(section, k("value"), float, 0.0))
    if kind == "polynomial":
        return Profile.polynomial(r.get_list(section, k("coeffs"), (0.0,)))
    if kind == "sine_mode":
        return Profile.sine_mode(r.get(section, k("amplitude"), float, 1.0), r.get(section, k("mode"), int, 1),
                                 r.get(section, k("slope"), float, 0.0))
    samples = r.get_list(section, k("samples"))
    if len(samples) < 2:
        r.error(section, k("samples"), "table profile needs at least 2 samples")
        return Profile.zero()
    return Profile.table(samples)


def _boundary(r: _Reader, section: str, prefix: str = "", default=None):
    kind_key = prefix.rstrip("_") if prefix else "kind"
    kind = r.get(section, kind_key, str)
    if kind is None:
        return default if default is not None else BoundarySignal.zero()
    kind = kind.lower()
    if kind not in BOUNDARY_KEYS:
        r.error(section, kind_key, f"unknown signal kind {kind!r}; expected one of {', '.join(BOUNDARY_KEYS)}")
        return BoundarySignal.zero()
    k = lambda name: prefix + name  # noqa: E731
    g = lambda name, d=0.0: r.get(section, k(name), float, d)  # noqa: E731
    if kind == "zero":
        return BoundarySignal.zero()
    if kind == "constant":
        return BoundarySignal.constant(g("value"))
    if kind == "sinusoid":
        return BoundarySignal.sinusoid(g("amplitude"), g("frequency"), g("phase"), g("offset"))
    if kind == "decaying_sinusoid":
        return BoundarySignal.decaying_sinusoid(g("amplitude"), g("frequency"), g("decay"), g("phase"), g("offset"))
    samples, period = r.get_list(section, k("samples")), g("sample_period")
    if len(samples) < 2 or period <= 0:
        r.error(section, k("samples"), "table signal needs >= 2 samples and sample_period > 0")
        return BoundarySignal.zero()
    return BoundarySignal.table(samples, period)


def _field(r: _Reader, section: str = "f"):
    kind = r.get(section, "kind", str)
    if kind is None:
        return FieldSignal.zero()
    kind = kind.lower()
    if kind not in FIELD_KEYS:
        r.error(section, "kind", f"unknown field kind {kind!r}; expected one of {', '.join(sorted(FIELD_KEYS))}")
        return FieldSignal.zero()
    if kind == "zero":
        return FieldSignal.zero()
    if kind == "separable":
        prof = _profile(r, section, "profile_", Profile.constant(1.0))
        time = _boundary(r, section, "time_", BoundarySignal.constant(1.0))
        return FieldSignal.separable(prof, time)
    if kind == "traveling":
        return FieldSignal.traveling(_profile(r, section, "profile_", Profile.zero()),
                                     r.get(section, "speed", float, 0.0))
    values = r.get_table(section, "values")
    period = r.get(section, "sample_period", float, 0.0)
    try:
        return FieldSignal.table(values, period)
    except ValueError as exc:
        r.error(section, "values", str(exc))
        return FieldSignal.zero()


def _read_raw(text: str, source: str):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str.lower
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        head = f"line {line}: " if line else ""
        msg = getattr(exc, "message", str(exc)).splitlines()[0]
        raise ConfigError([f"{head}parse error: {msg}"], source) from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}


def scenario_from_raw(raw: dict, lines: dict | None = None, source: str | None = None) -> Scenario:
    """Build and validate a Scenario from section dicts of raw strings."""
    r = _Reader(raw, lines or {})
    for section in raw:
        if section not in SECTIONS:
            r.error(section, None, f"unknown section; expected one of {', '.join(SECTIONS)}")
    kw = {}
    for section, keys in SCALAR_KEYS.items():
        for key, kind in keys.items():
            value = r.get(section, key, kind)
            if value is not None:
                kw[key] = value
    if "theorems" in kw:
        kw["theorems"] = tuple(t.strip() for t in kw["theorems"].replace(";", ",").split(",") if t.strip())
    kw["u0"] = _profile(r, "u0")
    kw["a"] = _profile(r, "a", default=Profile.constant(0.0))
    kw["d"] = _boundary(r, "d")
    kw["f"] = _field(r)
    for section, sec in raw.items():
        if section in ("sweep",) or section not in SECTIONS:
            continue
        for key in sec:
            if (section, key) not in r.used:
                r.error(section, key, "unknown key")
    problems = list(r.problems)
    scenario = None
    try:
        scenario = Scenario(**kw)
    except (TypeError, ValueError) as exc:
        problems.append(str(exc))
    if scenario is not None:
        problems.extend(_locate(r, msg) for msg in scenario.problems())
    if problems:
        raise ConfigError(problems, source)
    return scenario


def _locate(r: _Reader, msg: str) -> str:
    """Prefix a scenario-level problem with the line of the key it names."""
    key = msg.split(" ", 1)[0]
    for section, keys in SCALAR_KEYS.items():
        if key in keys and (section, key) in r.lines:
            return f"{r.where(section, key)}{msg}"
    return msg


def load_raw(path) -> tuple:
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"], str(path))
    text = path.read_text()
    return _read_raw(text, str(path)), _line_index(text)


def parse_config(path) -> Scenario:
    """Validated Scenario from an INI file; raises ConfigError listing every problem."""
    raw, lines = load_raw(path)
    return scenario_from_raw(raw, lines, str(path))


def sweep_cells(raw: dict, lines: dict | None = None, source: str | None = None) -> list:
    """Cartesian product of the ``[sweep]`` section as (label, raw) pairs.

    The base configuration is the file without its ``[sweep]`` section.
    """
    sweep = raw.get("sweep", {})
    base = {s: dict(v) for s, v in raw.items() if s != "sweep"}
    axes, problems = [], []
    for key, values in sweep.items():
        targets = [t.strip() for t in key.split("+")]
        for t in targets:
            if "." not in t:
                line = (lines or {}).get(("sweep", key))
                problems.append(f"{'line %d: ' % line if line else ''}[sweep] {key}: expected section.key")
        options = [v.strip() for v in values.split(",") if v.strip()]
        if not options:
            problems.append(f"[sweep] {key}: no values")
        axes.append((targets, options))
    if problems:
        raise ConfigError(problems, source)
    cells = []
    for combo in itertools.product(*[opts for _, opts in axes]):
        cell = {s: dict(v) for s, v in base.items()}
        parts = []
        for (targets, _), value in zip(axes, combo):
            for t in targets:
                section, key = t.split(".", 1)
                cell.setdefault(section, {})[key.lower()] = value
            parts.append(f"{'+'.join(targets)}={value}")
        cells.append((",".join(parts), cell))
    return cells
