"""Disturbance signals, initial data and their running statistics.

Three families of inputs drive a simulation:

``BoundarySignal``
    the boundary value d(t) applied at x = 1;
``FieldSignal``
    the in-domain forcing f(x, t);
``Profile``
    functions of x alone: initial data u0 and the reaction coefficient a(x).

Each family supports linear combination so that superposition experiments
can be expressed without special cases.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ParameterError
from .grid import GridFunction, trapezoid_weights

BOUNDARY_KINDS = ("zero", "constant", "sinusoid", "decaying_sinusoid", "table", "combination")
FIELD_KINDS = ("zero", "separable", "traveling", "table", "combination", "exp_scaled")
PROFILE_KINDS = ("zero", "constant", "polynomial", "sine_mode", "table", "combination", "exp_scaled")


def _check_kind(kind, allowed, what):
    if kind not in allowed:
        raise ParameterError(f"unknown {what} kind {kind!r}; expected one of {', '.join(allowed)}")


@dataclass(frozen=True)
class BoundarySignal:
    """Time signal d(t).

    ``sinusoid`` is ``amplitude * sin(frequency * t + phase) + offset``;
    ``decaying_sinusoid`` multiplies the oscillating part by ``exp(-decay * t)``;
    ``table`` interpolates ``samples`` taken every ``sample_period`` seconds
    with a cubic spline and holds the last sample afterwards.
    """

    kind: str = "zero"
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    offset: float = 0.0
    decay: float = 0.0
    samples: Tuple[float, ...] = ()
    sample_period: float = 0.0
    terms: Tuple[Tuple[float, "BoundarySignal"], ...] = ()
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        _check_kind(self.kind, BOUNDARY_KINDS, "boundary signal")
        if self.kind == "table":
            if len(self.samples) < 2 or self.sample_period <= 0:
                raise ParameterError("table signal needs >= 2 samples and a positive sample_period")
            ts = np.arange(len(self.samples)) * self.sample_period
            object.__setattr__(self, "_spline", CubicSpline(ts, np.asarray(self.samples, float)))

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, value):
        return cls("constant", amplitude=float(value))

    @classmethod
    def sinusoid(cls, amplitude, frequency, phase=0.0, offset=0.0):
        return cls("sinusoid", amplitude=amplitude, frequency=frequency, phase=phase, offset=offset)

    @classmethod
    def decaying_sinusoid(cls, amplitude, frequency, decay, phase=0.0, offset=0.0):
        return cls("decaying_sinusoid", amplitude=amplitude, frequency=frequency,
                   decay=decay, phase=phase, offset=offset)

    @classmethod
    def table(cls, samples, sample_period):
        return cls("table", samples=tuple(float(s) for s in samples), sample_period=float(sample_period))

    def combine(self, alpha, other=None, beta=0.0):
        """Return ``alpha * self + beta * other``."""
        terms = [(float(alpha), self)]
        if other is not None:
            terms.append((float(beta), other))
        return BoundarySignal("combination", terms=tuple(terms))

    @property
    def is_c2(self) -> bool:
        """False for table data, which is only approximately C2."""
        if self.kind == "table":
            return False
        if self.kind == "combination":
            return all(sig.is_c2 for _, sig in self.terms)
        return True

    def __call__(self, t):
        return eval_boundary(self, t)


def eval_boundary(sig: BoundarySignal, t: float) -> float:
    if t < 0:
        raise ParameterError(f"boundary signal evaluated at negative time {t}")
    kind = sig.kind
    if kind == "zero":
        return 0.0
    if kind == "constant":
        return float(sig.amplitude)
    if kind == "sinusoid":
        return float(sig.amplitude * np.sin(sig.frequency * t + sig.phase) + sig.offset)
    if kind == "decaying_sinusoid":
        return float(sig.amplitude * np.exp(-sig.decay * t) * np.sin(sig.frequency * t + sig.phase)
                     + sig.offset)
    if kind == "table":
        t_end = (len(sig.samples) - 1) * sig.sample_period
        return float(sig._spline(min(t, t_end)))
    return float(sum(c * eval_boundary(s, t) for c, s in sig.terms))


@dataclass(frozen=True)
class Profile:
    """Function of x on [0, 1].

    ``polynomial`` takes ascending coefficients; ``sine_mode`` is
    ``amplitude * sin(mode * pi * x) + slope * x``; ``table`` holds samples on
    a uniform grid over [0, 1] and is interpolated with a cubic spline.
    """

    kind: str = "zero"
    value: float = 0.0
    coeffs: Tuple[float, ...] = ()
    amplitude: float = 0.0
    mode: int = 1
    slope: float = 0.0
    samples: Tuple[float, ...] = ()
    rate: float = 0.0
    terms: Tuple[Tuple[float, "Profile"], ...] = ()
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        _check_kind(self.kind, PROFILE_KINDS, "profile")
        if self.kind == "table":
            if len(self.samples) < 2:
                raise ParameterError("table profile needs at least 2 samples")
            xs = np.linspace(0.0, 1.0, len(self.samples))
            object.__setattr__(self, "_spline", CubicSpline(xs, np.asarray(self.samples, float)))

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, value):
        return cls("constant", value=float(value))

    @classmethod
    def polynomial(cls, coeffs):
        return cls("polynomial", coeffs=tuple(float(c) for c in coeffs))

    @classmethod
    def sine_mode(cls, amplitude=1.0, mode=1, slope=0.0):
        return cls("sine_mode", amplitude=float(amplitude), mode=int(mode), slope=float(slope))

    @classmethod
    def table(cls, samples):
        return cls("table", samples=tuple(float(s) for s in samples))

    def combine(self, alpha, other=None, beta=0.0):
        terms = [(float(alpha), self)]
        if other is not None:
            terms.append((float(beta), other))
        return Profile("combination", terms=tuple(terms))

    def exp_scaled(self, rate):
        """Return ``exp(rate * x) * self(x)``."""
        return Profile("exp_scaled", rate=float(rate), terms=((1.0, self),))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        kind = self.kind
        if kind == "zero":
            return np.zeros_like(x)
        if kind == "constant":
            return np.full_like(x, self.value)
        if kind == "polynomial":
            return np.polynomial.polynomial.polyval(x, self.coeffs) + np.zeros_like(x)
        if kind == "sine_mode":
            return self.amplitude * np.sin(self.mode * np.pi * x) + self.slope * x
        if kind == "table":
            return self._spline(x)
        if kind == "exp_scaled":
            return np.exp(self.rate * x) * self.terms[0][1](x)
        return sum(c * p(x) for c, p in self.terms) + np.zeros_like(x)

    def on(self, grid) -> GridFunction:
        return grid.sample(self)


InitialCondition = Profile


@dataclass(frozen=True)
class FieldSignal:
    """Space-time forcing f(x, t).

    ``separable`` is ``profile(x) * time(t)``; ``traveling`` is
    ``profile((x - speed * t) mod 1)``; ``table`` holds a (n_times, n_x) array
    sampled on a uniform x grid and every ``sample_period`` seconds, linear in
    x and cubic in t.
    """

    kind: str = "zero"
    profile: Profile = Profile()
    time: BoundarySignal = BoundarySignal.constant(1.0)
    speed: float = 0.0
    table_values: Tuple[Tuple[float, ...], ...] = ()
    sample_period: float = 0.0
    rate: float = 0.0
    terms: Tuple[Tuple[float, "FieldSignal"], ...] = ()
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        _check_kind(self.kind, FIELD_KINDS, "field signal")
        if self.kind == "table":
            arr = np.asarray(self.table_values, dtype=float)
            if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2 or self.sample_period <= 0:
                raise ParameterError("table field needs a 2-D (n_times >= 2, n_x >= 2) array and sample_period > 0")
            ts = np.arange(arr.shape[0]) * self.sample_period
            object.__setattr__(self, "_spline", CubicSpline(ts, arr, axis=0))

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def separable(cls, profile, time=None):
        return cls("separable", profile=profile, time=time or BoundarySignal.constant(1.0))

    @classmethod
    def traveling(cls, profile, speed):
        return cls("traveling", profile=profile, speed=float(speed))

    @classmethod
    def table(cls, values, sample_period):
        vals = tuple(tuple(float(v) for v in row) for row in values)
        return cls("table", table_values=vals, sample_period=float(sample_period))

    def combine(self, alpha, other=None, beta=0.0):
        terms = [(float(alpha), self)]
        if other is not None:
            terms.append((float(beta), other))
        return FieldSignal("combination", terms=tuple(terms))

    def exp_scaled(self, rate):
        """Return ``exp(rate * x) * self(x, t)``."""
        return FieldSignal("exp_scaled", rate=float(rate), terms=((1.0, self),))

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "combination":
            return all(c == 0 or f.is_zero for c, f in self.terms)
        return False

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        kind = self.kind
        if kind == "zero":
            return np.zeros_like(x)
        if kind == "separable":
            return self.profile(x) * eval_boundary(self.time, t)
        if kind == "traveling":
            return self.profile(np.mod(x - self.speed * t, 1.0))
        if kind == "table":
            n_t = len(self.table_values)
            t_end = (n_t - 1) * self.sample_period
            row = self._spline(min(t, t_end))
            xs = np.linspace(0.0, 1.0, row.shape[0])
            return np.interp(x, xs, row)
        if kind == "exp_scaled":
            return np.exp(self.rate * x) * self.terms[0][1](x, t)
        return sum(c * f(x, t) for c, f in self.terms) + np.zeros_like(x)

    def on(self, grid, t) -> GridFunction:
        return GridFunction(grid, self(grid.nodes, t))


@dataclass(frozen=True)
class RunningStats:
    """Running maxima and integrals of the disturbances up to the current time.

    ``last_f_l2sq`` is the squared L2 norm of the latest forcing sample; it is
    kept so the time integral can advance by the trapezoid rule.
    """

    sup_d: float = 0.0
    sup_f: float = 0.0
    int_f_l2sq: float = 0.0
    last_f_l2sq: float = 0.0

    @classmethod
    def start(cls, d_value: float, f_snapshot: GridFunction) -> "RunningStats":
        f_vals = f_snapshot.values
        return cls(
            sup_d=abs(float(d_value)),
            sup_f=float(np.max(np.abs(f_vals))) if f_vals.size else 0.0,
            int_f_l2sq=0.0,
            last_f_l2sq=float(trapezoid_weights(f_snapshot.grid) @ (f_vals * f_vals)),
        )


def update_stats(stats: RunningStats, d_value: float, f_snapshot: GridFunction, dt: float) -> RunningStats:
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    f_vals = f_snapshot.values
    f_l2sq = float(trapezoid_weights(f_snapshot.grid) @ (f_vals * f_vals))
    return replace(
        stats,
        sup_d=max(stats.sup_d, abs(float(d_value))),
        sup_f=max(stats.sup_f, float(np.max(np.abs(f_vals)))),
        int_f_l2sq=stats.int_f_l2sq + 0.5 * dt * (stats.last_f_l2sq + f_l2sq),
        last_f_l2sq=f_l2sq,
    )
