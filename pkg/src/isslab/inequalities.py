"""Executable checks of the functional inequalities used in the energy estimates.

All checks work on the unit interval.  A check that fails on the given grid
is repeated at four times the resolution when a ``refine`` callable is
supplied (the function's formula), so discretization artifacts are not
reported as violations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DimensionError, ParameterError
from .grid import Grid, GridFunction, central_derivative, trapezoid_weights

REL_TOL = 1e-6
GRONWALL_TOL = 1e-3
REFINE_FACTOR = 4


class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _sq_norms(f: GridFunction):
    w = trapezoid_weights(f.grid)
    fx = central_derivative(f).values
    return float(w @ (f.values**2)), float(w @ (fx**2))


def _refined(f: GridFunction, refine: Optional[Callable]):
    return Grid(REFINE_FACTOR * f.grid.n_cells).sample(refine)


def _recheck(result: InequalityCheck, f, refine, again):
    if result.holds or refine is None:
        return result
    return again(_refined(f, refine))


def check_poincare(f: GridFunction, zero_point_index: int = 0, refine: Optional[Callable] = None) -> InequalityCheck:
    """||f||^2 <= (1/2) ||f_x||^2 for f vanishing at one node."""
    if abs(f.values[zero_point_index]) > 1e-10:
        raise ParameterError(
            f"f must vanish at node {zero_point_index}, found {f.values[zero_point_index]:.3g}"
        )
    l2sq, dxsq = _sq_norms(f)
    out = InequalityCheck(l2sq, 0.5 * dxsq, l2sq <= 0.5 * dxsq * (1 + REL_TOL))
    c = f.grid.nodes[zero_point_index]
    return _recheck(out, f, refine,
                    lambda g: check_poincare(g, int(round(c * g.grid.n_cells))))


def check_sobolev_point(f: GridFunction, c_index: int, refine: Optional[Callable] = None) -> InequalityCheck:
    """f(c)^2 <= 2 ||f||^2 + ||f_x||^2."""
    l2sq, dxsq = _sq_norms(f)
    lhs, rhs = float(f.values[c_index]) ** 2, 2.0 * l2sq + dxsq
    out = InequalityCheck(lhs, rhs, lhs <= rhs * (1 + REL_TOL))
    c = f.grid.nodes[c_index]
    return _recheck(out, f, refine,
                    lambda g: check_sobolev_point(g, int(round(c * g.grid.n_cells))))


def check_sobolev_lp(f: GridFunction, p: float, refine: Optional[Callable] = None) -> InequalityCheck:
    """(int |f|^p)^{1/p} <= (2 ||f||^2 + ||f_x||^2)^{1/2}."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    l2sq, dxsq = _sq_norms(f)
    w = trapezoid_weights(f.grid)
    lhs = float(w @ np.abs(f.values) ** p) ** (1.0 / p)
    rhs = float(np.sqrt(2.0 * l2sq + dxsq))
    out = InequalityCheck(lhs, rhs, lhs <= rhs * (1 + REL_TOL))
    return _recheck(out, f, refine, lambda g: check_sobolev_lp(g, p))


def gronwall_bound(y0: float, g_series, h_series, times) -> np.ndarray:
    """y0 exp(int_0^t g) + int_0^t h(s) exp(int_s^t g) ds by the trapezoid rule."""
    times = np.asarray(times, float)
    g = np.asarray(g_series, float)
    h = np.asarray(h_series, float)
    if not (g.shape == h.shape == times.shape):
        raise DimensionError("g, h and times must share one time grid")
    if np.any(np.diff(times) <= 0):
        raise ParameterError("times must be strictly increasing")
    G = cumulative_trapezoid(g, times, initial=0.0)
    inner = cumulative_trapezoid(h * np.exp(-G), times, initial=0.0)
    return y0 * np.exp(G) + np.exp(G) * inner


def check_gronwall(y_series, g_series, h_series, times):
    """(observed, bound, holds) with holds = y <= bound (1 + 1e-3) + 1e-12 everywhere."""
    y = np.asarray(y_series, float)
    if y.shape != np.shape(times):
        raise DimensionError("y and times must have the same length")
    bound = gronwall_bound(float(y[0]), g_series, h_series, times)
    holds = bool(np.all(y <= bound * (1 + GRONWALL_TOL) + 1e-12))
    return y, bound, holds


def differential_inequality_holds(y_series, g_series, h_series, times, tol: float = 1e-6) -> bool:
    """Whether dy/dt <= g y + h holds on every step (forward differences, trapezoid right side)."""
    y, g, h, t = (np.asarray(a, float) for a in (y_series, g_series, h_series, times))
    dy = np.diff(y) / np.diff(t)
    rhs = 0.5 * ((g * y + h)[1:] + (g * y + h)[:-1])
    return bool(np.all(dy <= rhs + tol * (1 + np.abs(rhs))))


def check_young(a: float, b: float, epsilon: float) -> bool:
    """a b <= a^2 / (2 eps) + eps b^2 / 2 for a, b >= 0 and eps > 0."""
    if a < 0 or b < 0:
        raise ParameterError("a and b must be nonnegative")
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    rhs = a * a / (2.0 * epsilon) + epsilon * b * b / 2.0
    return a * b <= rhs * (1 + 1e-12)


# ---------------------------------------------------------------------------
# Randomized battery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SineSeries:
    """sum_k c_k sin(k pi x); vanishes at both ends."""

    modes: tuple
    coeffs: tuple

    def __call__(self, x):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        for k, c in zip(self.modes, self.coeffs):
            out = out + c * np.sin(k * np.pi * x)
        return out


def random_smooth_function(rng: np.random.Generator, max_modes: int = 5, max_frequency: int = 8) -> SineSeries:
    """Sum of at most ``max_modes`` sine modes with coefficients in [-1, 1]."""
    count = int(rng.integers(1, max_modes + 1))
    modes = rng.choice(np.arange(1, max_frequency + 1), size=count, replace=False)
    coeffs = rng.uniform(-1.0, 1.0, size=count)
    return SineSeries(tuple(int(k) for k in modes), tuple(float(c) for c in coeffs))


def _random_gronwall_case(rng, n_times=2001, t_final=2.0):
    """A y with y' = g y + h - r, r >= 0, so y satisfies the differential inequality."""
    t = np.linspace(0.0, t_final, n_times)
    a = rng.uniform(-1, 1, 3)
    om = rng.uniform(0.5, 3.0, 3)
    y = 1.0 + rng.uniform(0, 1) + 0.3 * (a[0] * np.sin(om[0] * t) + a[1] * np.cos(om[1] * t))
    dy = 0.3 * (a[0] * om[0] * np.cos(om[0] * t) - a[1] * om[1] * np.sin(om[1] * t))
    g = rng.uniform(-2, 1) + 0.5 * a[2] * np.sin(om[2] * t)
    r = rng.uniform(0, 1) * (1 + np.sin(om[2] * t + a[0]))
    h = dy - g * y + r
    return y, g, h, t


@dataclass
class BatteryResult:
    trials: int
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def n_failures(self) -> int:
        return len(self.failures)

    @property
    def passed(self) -> bool:
        return not self.failures

    def _tally(self, name, ok, detail):
        self.checks[name] = self.checks.get(name, 0) + 1
        if not ok:
            self.failures.append((name, detail))


def run_battery(n_trials: int = 1000, seed: int = 0, n_cells: int = 200, ps=(1, 2, 4, 10)) -> BatteryResult:
    """Every inequality on ``n_trials`` random functions (and random Young/Gronwall data)."""
    rng = np.random.default_rng(seed)
    grid = Grid(n_cells)
    res = BatteryResult(n_trials)
    for trial in range(n_trials):
        fn = random_smooth_function(rng)
        f = grid.sample(fn)
        res._tally("poincare", check_poincare(f, 0, refine=fn).holds, (trial, fn))
        c = int(rng.integers(0, grid.size))
        res._tally("sobolev_point", check_sobolev_point(f, c, refine=fn).holds, (trial, fn, c))
        for p in ps:
            res._tally(f"sobolev_lp[p={p}]", check_sobolev_lp(f, p, refine=fn).holds, (trial, fn, p))
        a, b = rng.uniform(0, 10, 2)
        eps = float(rng.uniform(0.01, 10))
        res._tally("young", check_young(a, b, eps), (trial, a, b, eps))
        y, g, h, t = _random_gronwall_case(rng)
        res._tally("gronwall", check_gronwall(y, g, h, t)[2], (trial,))
    return res
