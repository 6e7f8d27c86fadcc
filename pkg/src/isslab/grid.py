"""Uniform grids on [0, 1], grid functions, quadrature and discrete norms."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class Grid:
    """``n_cells`` equal intervals on [0, 1]."""

    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise DimensionError(f"n_cells must be a positive integer, got {self.n_cells!r}")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        # i / n keeps nodes[0] = 0 and nodes[-1] = 1 exact
        return np.arange(self.n_cells + 1) / self.n_cells

    @property
    def size(self) -> int:
        return self.n_cells + 1

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """Evaluate a vectorized callable at the nodes."""
        return GridFunction(self, np.broadcast_to(fn(self.nodes), (self.size,)).astype(float))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] != self.grid.size:
            raise DimensionError(
                f"expected {self.grid.size} values for n_cells={self.grid.n_cells}, got shape {vals.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise DimensionError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._coerce(other))

    def __rsub__(self, other):
        return self.with_values(self._coerce(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class NormTriple:
    l2: float
    h1: float
    linf: float


def trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.full(grid.size, grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    return w


def trapezoid_integral(f: GridFunction) -> float:
    """Composite trapezoid rule over the grid (exact for affine data)."""
    return float(trapezoid_weights(f.grid) @ f.values)


def derivative_values(values: np.ndarray, h: float) -> np.ndarray:
    """Second-order differences: central inside, one-sided at both ends."""
    n = values.shape[0]
    if n < 3:
        raise DimensionError("central_derivative needs at least 3 nodes")
    out = np.empty(n)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * h)
    return out


def central_derivative(f: GridFunction) -> GridFunction:
    return f.with_values(derivative_values(f.values, f.grid.h))


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(trapezoid_weights(f.grid) @ (f.values * f.values)))


def norms_of_values(values: np.ndarray, h: float, weights: np.ndarray | None = None) -> NormTriple:
    """Norm triple straight from a value array (used in the time loops)."""
    if weights is None:
        weights = np.full(values.shape[0], h)
        weights[0] = weights[-1] = 0.5 * h
    l2sq = float(weights @ (values * values))
    dx = derivative_values(values, h)
    h1sq = l2sq + float(weights @ (dx * dx))
    linf = float(np.max(np.abs(values))) if values.size else 0.0
    return NormTriple(l2=float(np.sqrt(l2sq)), h1=float(np.sqrt(h1sq)), linf=linf)


def norms(f: GridFunction) -> NormTriple:
    """Discrete L2, H1 and max norms of ``f``."""
    return norms_of_values(f.values, f.grid.h, trapezoid_weights(f.grid))
