"""Exponential transform, two-subsystem splittings and superposition checks.

For u_t = mu u_xx - m u_x - n u + f the substitution u = e^{m x / (2 mu)} u~
removes advection and shifts the reaction coefficient to
n~ = m^2/(4 mu) + n.  In ``ExpTransform`` terms, u~ is the inverse
transform of u and u the forward transform of u~.

The splittings decompose a scenario u = w + v into a subsystem carrying the
initial data (homogeneous boundary) and one carrying the boundary
disturbance (zero initial data); ``placement`` says which of the two
receives the in-domain forcing f.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DimensionError, ParameterError
from .grid import GridFunction
from .scenario import Scenario
from .signals import BoundarySignal, FieldSignal, Profile, eval_boundary
from .solvers import TrajectoryRecord, simulate

DEFAULT_PLACEMENT = {"transport": "v", "burgers": "w"}


@dataclass(frozen=True)
class ExpTransform:
    m: float
    mu: float
    direction: str = "forward"

    def __post_init__(self):
        if self.direction not in ("forward", "inverse"):
            raise ParameterError("direction must be 'forward' or 'inverse'")
        if not self.mu > 0:
            raise ParameterError("mu must be positive")

    @property
    def rate(self) -> float:
        r = self.m / (2.0 * self.mu)
        return r if self.direction == "forward" else -r

    @property
    def inverse(self) -> "ExpTransform":
        return ExpTransform(self.m, self.mu, "inverse" if self.direction == "forward" else "forward")

    @property
    def shifted_n(self):
        """Reaction coefficient n~ - n induced by the transform."""
        return self.m * self.m / (4.0 * self.mu)


def exp_transform(f: GridFunction, xf: ExpTransform) -> GridFunction:
    """Multiply ``f`` pointwise by exp(+-m x / (2 mu))."""
    return f.with_values(np.exp(xf.rate * f.grid.nodes) * f.values)


def removal_rate(m: float, mu: float) -> float:
    """Exponent r with u~ = e^{r x} u advection-free, r = -m / (2 mu)."""
    return -m / (2.0 * mu)


def transformed_scenario(scenario: Scenario) -> Scenario:
    """Advection-free transport scenario satisfied by u~ = e^{-m x/(2 mu)} u."""
    if scenario.plant != "transport":
        raise ParameterError("the exponential transform applies to the transport plant only")
    rate = removal_rate(scenario.m, scenario.mu)
    return scenario.with_(
        m=0.0,
        n=scenario.m**2 / (4.0 * scenario.mu) + scenario.n,
        u0=scenario.u0.exp_scaled(rate),
        d=scenario.d.combine(np.exp(rate)),
        f=scenario.f.exp_scaled(rate),
    )


@dataclass(frozen=True)
class SplitPair:
    subsystem_w: Scenario
    subsystem_v: Scenario
    placement: str
    # v's equation contains w (Burgers cross terms), so w must be simulated first
    coupled: bool = False


def split(scenario: Scenario, placement: str | None = None) -> SplitPair:
    """Split ``scenario`` into the w/v subsystems.

    Transport: w carries u0 with homogeneous boundary data, v carries d with
    zero initial data.  Burgers: w carries d with zero initial data, v
    carries u0 and the cross terms nu (w v)_x.  ``placement`` ("w" or "v")
    chooses the subsystem that receives f.
    """
    if scenario.plant not in DEFAULT_PLACEMENT:
        raise ParameterError(f"no splitting is defined for plant {scenario.plant!r}")
    placement = placement or DEFAULT_PLACEMENT[scenario.plant]
    if placement not in ("w", "v"):
        raise ParameterError("placement must be 'w' or 'v'")
    d0 = eval_boundary(scenario.d, 0.0)
    if abs(d0) > 1e-12:
        raise ParameterError(
            f"splitting needs d(0) = 0 (got {d0:.3g}); otherwise the subsystems violate boundary compatibility"
        )

    zero_d, zero_f, zero_u0 = BoundarySignal.zero(), FieldSignal.zero(), Profile.zero()
    f_w = scenario.f if placement == "w" else zero_f
    f_v = scenario.f if placement == "v" else zero_f
    tag = dict(placement=placement, theorems=())
    if scenario.plant == "transport":
        w = scenario.with_(d=zero_d, f=f_w, role="w", name=scenario.name + ":w", **tag)
        v = scenario.with_(u0=zero_u0, f=f_v, role="v", name=scenario.name + ":v", **tag)
        return SplitPair(w, v, placement, coupled=False)
    w = scenario.with_(u0=zero_u0, f=f_w, role="w", name=scenario.name + ":w", **tag)
    v = scenario.with_(d=zero_d, f=f_v, role="v", name=scenario.name + ":v", **tag)
    return SplitPair(w, v, placement, coupled=True)


def simulate_split(pair: SplitPair) -> Tuple[TrajectoryRecord, TrajectoryRecord]:
    """Simulate both subsystems on the same time grid."""
    if pair.coupled:
        w = simulate(pair.subsystem_w, keep_states=True)
        v = simulate(pair.subsystem_v, background=w.meta["states"])
        return w, v
    return simulate(pair.subsystem_w), simulate(pair.subsystem_v)


def verify_superposition(original: TrajectoryRecord, w: TrajectoryRecord, v: TrajectoryRecord) -> float:
    """Max over recorded snapshots and nodes of |u - (w + v)| (transport only)."""
    for rec in (original, w, v):
        if rec.plant != "transport":
            raise ParameterError("exact superposition holds only for the linear transport plant")
    if not (original.grid == w.grid == v.grid):
        raise DimensionError("trajectories live on different grids")
    same_times = (
        original.snapshot_times.shape == w.snapshot_times.shape == v.snapshot_times.shape
        and np.allclose(original.snapshot_times, w.snapshot_times, rtol=0, atol=1e-12)
        and np.allclose(original.snapshot_times, v.snapshot_times, rtol=0, atol=1e-12)
    )
    if not same_times:
        raise DimensionError("trajectories were recorded at different times")
    return float(np.max(np.abs(original.snapshots - (w.snapshots + v.snapshots))))
