"""Time steppers for the transport, Burgers and reaction plants.

All plants share the boundary data u(0, t) = 0, u(1, t) = d(t), imposed by
direct injection at the end nodes.  Diffusion is always Crank-Nicolson; the
interior solve is a tridiagonal system.  Burgers' convection is explicit in
conservative form (Heun predictor-corrector), which keeps the step second
order without a start-up phase.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import BlowUpError, DimensionError, ParameterError, SolverError, StepSizeError
from .grid import Grid, GridFunction, NormTriple, norms_of_values, trapezoid_weights
from .scenario import Scenario
from .signals import RunningStats, eval_boundary

BLOWUP_LIMIT = 1e6
CFL_FLOOR = 1e-12


@dataclass(frozen=True)
class TransportParams:
    mu: float
    m: float = 0.0
    n: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ParameterError("mu must be positive")

    @property
    def stability_margin(self) -> float:
        return self.m * self.m / (4.0 * self.mu) + self.n

    @property
    def stable(self) -> bool:
        """Whether m^2/(4 mu) + n >= 0, the hypothesis of the transport envelopes."""
        return self.stability_margin >= 0.0


@dataclass(frozen=True)
class BurgersParams:
    mu: float
    nu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ParameterError("mu must be positive")
        if self.nu < 0:
            raise ParameterError("nu must be nonnegative")


@dataclass(frozen=True)
class ReactionParams:
    mu: float
    a: GridFunction
    m: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ParameterError("mu must be positive")


class LinearCN:
    """Crank-Nicolson stepper for u_t = mu u_xx - m u_x - c(x) u + f.

    The implicit tridiagonal coefficients are built once per (grid, dt).
    """

    def __init__(self, grid: Grid, dt: float, mu: float, m: float = 0.0, c=0.0):
        if dt <= 0:
            raise ParameterError("dt must be positive")
        if grid.size < 3:
            raise DimensionError("need at least 3 nodes")
        self.grid, self.dt = grid, dt
        h = grid.h
        c = np.broadcast_to(np.asarray(c, dtype=float), (grid.size,))
        self.west = mu / h**2 + m / (2 * h)
        self.east = mu / h**2 - m / (2 * h)
        self.centre = -2 * mu / h**2 - c[1:-1]
        k = grid.size - 2
        half = 0.5 * dt
        self.lower = np.full(k, -half * self.west)
        self.upper = np.full(k, -half * self.east)
        self.diag = 1.0 - half * self.centre
        # implicit coupling of the last interior node to the right boundary value
        self.right_coupling = half * self.east
        self._unit = None

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Spatial operator on interior nodes (length N-1)."""
        return self.west * u[:-2] + self.centre * u[1:-1] + self.east * u[2:]

    def explicit_rhs(self, u, source):
        """(I + dt/2 A) u + dt * source on the interior, before boundary terms."""
        return u[1:-1] + 0.5 * self.dt * self.apply(u) + self.dt * source

    def solve(self, rhs, right_value):
        rhs = rhs.copy()
        rhs[-1] += self.right_coupling * right_value
        out = np.empty(self.grid.size)
        out[0] = 0.0
        out[-1] = right_value
        out[1:-1] = kernels.tridiag_solve(self.lower, self.diag, self.upper, rhs)
        return out

    def unit_response(self):
        """Interior solution for zero rhs and unit right boundary value (cached)."""
        if self._unit is None:
            self._unit = self.solve(np.zeros(self.grid.size - 2), 1.0)
        return self._unit

    def step(self, u, right_next, f_now, f_next):
        rhs = self.explicit_rhs(u, 0.5 * (f_now[1:-1] + f_next[1:-1]))
        return self.solve(rhs, right_next)


def _values(x):
    return x.values if isinstance(x, GridFunction) else np.asarray(x, dtype=float)


def _check_finite(u, t=None):
    if not np.all(np.isfinite(u)):
        raise BlowUpError("solution became non-finite", time=t)
    peak = float(np.max(np.abs(u)))
    if peak > BLOWUP_LIMIT:
        raise BlowUpError(f"solution magnitude {peak:.3g} exceeds {BLOWUP_LIMIT:g}", time=t)


def step_transport(state: GridFunction, params: TransportParams, d_now, d_next, f_now, f_next, dt) -> GridFunction:
    """One Crank-Nicolson step of u_t = mu u_xx - m u_x - n u + f."""
    stepper = LinearCN(state.grid, dt, params.mu, params.m, params.n)
    u = stepper.step(state.values, float(d_next), _values(f_now), _values(f_next))
    _check_finite(u)
    return state.with_values(u)


def step_reaction(state: GridFunction, params: ReactionParams, d_now, d_next, f_now, f_next, dt) -> GridFunction:
    """As :func:`step_transport` with the reaction coefficient a(x) in place of n."""
    if params.a.grid != state.grid:
        raise DimensionError("reaction coefficient and state live on different grids")
    stepper = LinearCN(state.grid, dt, params.mu, params.m, params.a.values)
    u = stepper.step(state.values, float(d_next), _values(f_now), _values(f_next))
    _check_finite(u)
    return state.with_values(u)


class BurgersIMEX:
    """IMEX stepper for u_t = mu u_xx - nu (u^2/2)_x + f.

    With a ``background`` w the convected flux becomes ``v^2/2 + w v``, which
    is the perturbation equation of the split Burgers system.
    """

    def __init__(self, grid: Grid, dt: float, mu: float, nu: float):
        self.cn = LinearCN(grid, dt, mu)
        self.nu, self.dt, self.h = nu, dt, grid.h

    def convection(self, u, w=None):
        flux = 0.5 * u * u if w is None else (0.5 * u + w) * u
        return -self.nu * (flux[2:] - flux[:-2]) / (2.0 * self.h)

    def check_cfl(self, u, w=None, t=None):
        speed = float(np.max(np.abs(u)))
        if w is not None:
            speed += float(np.max(np.abs(w)))
        limit = self.h / max(self.nu * speed, CFL_FLOOR)
        if self.dt > limit:
            raise StepSizeError(
                f"dt = {self.dt:.3g} exceeds the convection limit h/(nu max|u|) = {limit:.3g}; reduce dt",
                time=t,
            )

    def step(self, u, right_next, f_now, f_next, w_now=None, w_next=None, t=None):
        self.check_cfl(u, w_now, t)
        cn, dt = self.cn, self.dt
        forcing = 0.5 * (f_now[1:-1] + f_next[1:-1])
        base = u[1:-1] + 0.5 * dt * cn.apply(u)
        conv_now = self.convection(u, w_now)
        pred = cn.solve(base + dt * (conv_now + forcing), right_next)
        _check_finite(pred, t)
        conv_pred = self.convection(pred, w_next)
        out = cn.solve(base + dt * (0.5 * (conv_now + conv_pred) + forcing), right_next)
        _check_finite(out, t)
        return out


def step_burgers(state: GridFunction, params: BurgersParams, d_now, d_next, f_now, f_next, dt,
                 background=None) -> GridFunction:
    """One IMEX step of u_t - mu u_xx + nu u u_x = f.

    ``background`` is an optional ``(w_now, w_next)`` pair; when given the
    step advances the perturbation v of u = w + v instead.
    """
    stepper = BurgersIMEX(state.grid, dt, params.mu, params.nu)
    w_now = w_next = None
    if background is not None:
        w_now, w_next = (_values(b) for b in background)
    u = stepper.step(state.values, float(d_next), _values(f_now), _values(f_next), w_now, w_next)
    return state.with_values(u)


@dataclass
class TrajectoryRecord:
    """Time series of norms, disturbance statistics and decimated snapshots."""

    grid: Grid
    times: np.ndarray
    l2: np.ndarray
    h1: np.ndarray
    linf: np.ndarray
    sup_d: np.ndarray
    sup_f: np.ndarray
    int_f_l2sq: np.ndarray
    d_values: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    plant: str = "transport"
    role: str = "full"
    placement: Optional[str] = None
    scenario: Optional[Scenario] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.shape[0]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    @property
    def norm_series(self):
        return [NormTriple(a, b, c) for a, b, c in zip(self.l2, self.h1, self.linf)]

    @property
    def stats_series(self):
        return [RunningStats(a, b, c) for a, b, c in zip(self.sup_d, self.sup_f, self.int_f_l2sq)]

    @property
    def running_linf(self) -> np.ndarray:
        """max over (x, s) in [0, 1] x [0, t] of |u|."""
        return np.maximum.accumulate(self.linf)

    @property
    def grad_l2sq(self) -> np.ndarray:
        return np.maximum(self.h1**2 - self.l2**2, 0.0)

    def snapshot(self, i) -> GridFunction:
        return GridFunction(self.grid, self.snapshots[i])

    @property
    def initial(self) -> GridFunction:
        return self.snapshot(0)

    @property
    def final(self) -> GridFunction:
        return self.snapshot(-1)


class _Recorder:
    def __init__(self, grid, n_steps, stride):
        self.grid, self.stride, self.n_steps = grid, stride, n_steps
        self.w = trapezoid_weights(grid)
        size = n_steps + 1
        self.cols = {k: np.empty(size) for k in ("times", "l2", "h1", "linf", "sup_d", "sup_f", "int_f_l2sq", "d_values")}
        self.snap_t, self.snaps = [], []
        self.stats = None

    def record(self, i, t, u, d_val, f_vals, dt):
        nt = norms_of_values(u, self.grid.h, self.w)
        f_l2sq = float(self.w @ (f_vals * f_vals))
        f_max = float(np.max(np.abs(f_vals)))
        if self.stats is None:
            self.stats = RunningStats(abs(d_val), f_max, 0.0, f_l2sq)
        else:
            s = self.stats
            self.stats = RunningStats(
                max(s.sup_d, abs(d_val)), max(s.sup_f, f_max),
                s.int_f_l2sq + 0.5 * dt * (s.last_f_l2sq + f_l2sq), f_l2sq,
            )
        c = self.cols
        c["times"][i] = t
        c["l2"][i], c["h1"][i], c["linf"][i] = nt.l2, nt.h1, nt.linf
        c["sup_d"][i], c["sup_f"][i], c["int_f_l2sq"][i] = self.stats.sup_d, self.stats.sup_f, self.stats.int_f_l2sq
        c["d_values"][i] = d_val
        if i % self.stride == 0 or i == self.n_steps:
            self.snap_t.append(t)
            self.snaps.append(u.copy())

    def finish(self, **meta) -> TrajectoryRecord:
        return TrajectoryRecord(
            grid=self.grid,
            snapshot_times=np.array(self.snap_t),
            snapshots=np.array(self.snaps),
            **self.cols,
            **meta,
        )


def _forcing(scenario, x, t):
    if scenario.f.is_zero:
        return np.zeros_like(x)
    return scenario.f(x, t)


def simulate(scenario: Scenario, background: Optional[np.ndarray] = None,
             keep_states: bool = False) -> TrajectoryRecord:
    """Step the scenario's plant from 0 to ``t_final``.

    ``background`` (Burgers only) holds the full w trajectory, one row per
    step, for the coupled perturbation system.  ``keep_states`` stores every
    state in ``record.meta["states"]``.
    """
    scenario.validate()
    if scenario.plant == "closed_loop":
        from .backstepping import run_closed_loop_scenario

        return run_closed_loop_scenario(scenario)[0]

    grid = Grid(scenario.n_cells)
    x = grid.nodes
    dt, n_steps = scenario.dt, scenario.n_steps
    if background is not None and (scenario.plant != "burgers" or background.shape != (n_steps + 1, grid.size)):
        raise DimensionError("background must be a Burgers trajectory with one row per step")

    if scenario.plant == "transport":
        TransportParams(scenario.mu, scenario.m, scenario.n)
        stepper = LinearCN(grid, dt, scenario.mu, scenario.m, scenario.n)
    elif scenario.plant == "reaction":
        stepper = LinearCN(grid, dt, scenario.mu, scenario.m, scenario.a(x))
    else:
        BurgersParams(scenario.mu, scenario.nu)
        stepper = BurgersIMEX(grid, dt, scenario.mu, scenario.nu)

    u = np.asarray(scenario.u0(x), dtype=float).copy()
    d_now = eval_boundary(scenario.d, 0.0)
    u[0], u[-1] = 0.0, d_now
    f_now = _forcing(scenario, x, 0.0)
    rec = _Recorder(grid, n_steps, scenario.snapshot_stride)
    rec.record(0, 0.0, u, d_now, f_now, dt)
    states = [u.copy()] if keep_states else None

    for i in range(n_steps):
        t_next = (i + 1) * dt
        d_next = eval_boundary(scenario.d, t_next)
        f_next = _forcing(scenario, x, t_next)
        try:
            if scenario.plant == "burgers":
                if background is None:
                    u = stepper.step(u, d_next, f_now, f_next, t=i * dt)
                else:
                    u = stepper.step(u, d_next, f_now, f_next, background[i], background[i + 1], t=i * dt)
            else:
                u = stepper.step(u, d_next, f_now, f_next)
                _check_finite(u, t_next)
        except SolverError as exc:
            if exc.time is None:
                raise type(exc)(str(exc), time=t_next) from exc
            raise
        rec.record(i + 1, t_next, u, d_next, f_next, dt)
        if keep_states:
            states.append(u.copy())
        f_now = f_next

    meta = {"states": np.array(states)} if keep_states else {}
    return rec.finish(plant=scenario.plant, role=scenario.role, placement=scenario.placement,
                      scenario=scenario, meta=meta)
