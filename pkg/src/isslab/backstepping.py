"""Backstepping boundary feedback for the reaction-diffusion plant.

Plant:   u_t = mu u_xx - m u_x - a(x) u + f,   u(0) = 0,   u(1) = U(t).
Target:  w_t = mu w_xx - n w + f_w,            w(0) = 0,   w(1) = d(t).

The transform w = u - int_0^x k(x, y) u(y) dy maps one onto the other when

    mu (k_xx - k_yy) = (n - a(y)) k,   k(x, 0) = 0,
    k(x, x) = -(1 / 2 mu) int_0^x (n - a(s)) ds,

and the control is U = d + int_0^1 k(1, y) u(y) dy.  The in-domain forcing
of the target system is f_w = f - int_0^x k(x, y) f(y) dy.  Advection is
handled by the exponential transform: with v = exp(-m x / 2 mu) u the kernel
is built for a + m^2 / (4 mu) and U = exp(m / 2 mu)(d + int k(1, y) v(y) dy).
This is :func:`control_law_shifted` with the advection sign flipped, since
that formula is written for the opposite sign convention.

Kernel arrays are lower triangular: ``values[i, j]`` holds k(x_i, y_j) for
j <= i and zero above the diagonal.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .envelopes import EnvelopeParams, envelope_T6i, make_verdict
from .errors import ConvergenceError, DimensionError, ParameterError
from .grid import Grid, GridFunction, NormTriple, derivative_values, norms
from .scenario import Scenario
from .signals import Profile, eval_boundary
from .solvers import LinearCN, ReactionParams, _check_finite, _Recorder
from .splitting import removal_rate

KERNEL_TOL = 1e-10
# closed-loop compatibility is judged after quadrature of the feedback integral
COMPAT_TOL = 1e-9
MAX_ITER = 200
CL_TOL = 0.05


@dataclass(frozen=True)
class VolterraKernel:
    n_cells: int
    values: np.ndarray
    direction: str = "forward"
    target_n: float = 0.0
    mu: float = 1.0
    iterations: int = 0
    residual: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.n_cells + 1, self.n_cells + 1):
            raise DimensionError("kernel values must be (n_cells + 1) x (n_cells + 1)")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def grid(self) -> Grid:
        return Grid(self.n_cells)

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.values).copy()

    @property
    def at_one(self) -> np.ndarray:
        """k(1, y_j) for every node y_j."""
        return self.values[-1].copy()

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def max_diag(self) -> float:
        return float(np.max(np.abs(self.diagonal)))

    @property
    def max_dx(self) -> float:
        """max |k_x| over the triangle (one-sided differences along x)."""
        out = 0.0
        h = self.h
        for j in range(self.n_cells - 1):
            col = self.values[j:, j]
            if col.size >= 3:
                out = max(out, float(np.max(np.abs(derivative_values(col, h)))))
        return out

    def subsample(self, n_cells: int) -> "VolterraKernel":
        """Restrict to a coarser grid whose nodes are kernel nodes."""
        if n_cells == self.n_cells:
            return self
        if self.n_cells % n_cells:
            raise ParameterError(f"kernel with {self.n_cells} cells cannot be restricted to {n_cells} cells")
        r = self.n_cells // n_cells
        return VolterraKernel(n_cells, self.values[::r, ::r], self.direction, self.target_n,
                              self.mu, self.iterations, self.residual)

    def to_csv(self, path) -> None:
        nodes = self.grid.nodes
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "y", "k" if self.direction == "forward" else "l"])
            for i in range(self.n_cells + 1):
                for j in range(i + 1):
                    writer.writerow([repr(float(nodes[i])), repr(float(nodes[j])), repr(float(self.values[i, j]))])


def _reaction_sampler(a):
    """Callable a(y) from a Profile/callable, a GridFunction, or a constant."""
    if isinstance(a, GridFunction):
        return CubicSpline(a.grid.nodes, a.values)
    if callable(a):
        return a
    value = float(a)
    return lambda y: np.full_like(np.asarray(y, float), value)


def solve_kernel(plant: ReactionParams | None = None, target_n: float = 0.0, n_cells: int = 128, *,
                 a=None, mu: float | None = None, tol: float = KERNEL_TOL,
                 max_iter: int = MAX_ITER) -> VolterraKernel:
    """Forward kernel by successive approximation in characteristic variables.

    The reaction coefficient comes from ``plant.a`` (a GridFunction,
    interpolated by a cubic spline) or from ``a`` (a Profile, callable or
    constant) together with ``mu``.
    """
    if plant is not None:
        a, mu = plant.a, plant.mu
    if a is None or mu is None:
        raise ParameterError("give either a ReactionParams plant or both a and mu")
    if not mu > 0:
        raise ParameterError("mu must be positive")
    if target_n < 0:
        raise ParameterError("target_n must be nonnegative")
    N = int(n_cells)
    if N < 2:
        raise ParameterError("n_cells must be >= 2")
    h = 1.0 / N
    a_of = _reaction_sampler(a)
    y_half = np.arange(2 * N + 1) * (0.5 * h)
    lam = (target_n - np.asarray(a_of(y_half), float)) / mu

    # G0[p, q] = -1/4 int_{q h}^{p h} lam(tau / 2) d tau
    Lam = kernels.cumulative_integral(lam, h)
    P = 2 * N + 1
    G0 = np.zeros((P, P))
    for q in range(N + 1):
        G0[q:P - q, q] = -0.25 * (Lam[q:P - q] - Lam[q])
    G = G0.copy()
    diff = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        G, diff = kernels.kernel_sweep(G, G0, lam, h)
        if diff < tol:
            break
    else:
        raise ConvergenceError(
            f"kernel iteration did not reach {tol:g} in {max_iter} sweeps (last change {diff:.3g})",
            residual=diff,
        )
    K = np.zeros((N + 1, N + 1))
    for i in range(N + 1):
        j = np.arange(i + 1)
        K[i, : i + 1] = G[i + j, i - j]
    return VolterraKernel(N, K, "forward", float(target_n), float(mu), it, float(diff))


def invert_kernel(k: VolterraKernel, tol: float = KERNEL_TOL, max_iter: int = MAX_ITER) -> VolterraKernel:
    """Inverse kernel l from l = k + int_y^x k(x, s) l(s, y) ds."""
    if k.direction != "forward":
        raise ParameterError("invert_kernel expects a forward kernel")
    K = np.array(k.values)
    table = kernels.segment_weight_table(k.n_cells + 1, k.h)
    L = K.copy()
    diff = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        L, diff = kernels.inverse_sweep(L, K, table)
        if diff < tol:
            break
    else:
        raise ConvergenceError(
            f"inverse kernel iteration did not reach {tol:g} in {max_iter} sweeps (last change {diff:.3g})",
            residual=diff,
        )
    return VolterraKernel(k.n_cells, np.tril(L), "inverse", k.target_n, k.mu, it, float(diff))


def _weights(kernel: VolterraKernel) -> np.ndarray:
    """W[i, j] = quadrature weight times kernel value, so (W @ f)_i ~ int_0^{x_i} kernel(x_i, y) f(y) dy."""
    table = kernels.segment_weight_table(kernel.n_cells + 1, kernel.h)
    return table * kernel.values


def _check_grid(kernel, f):
    if f.grid.n_cells != kernel.n_cells:
        raise DimensionError(f"kernel has {kernel.n_cells} cells but the function has {f.grid.n_cells}")


def volterra_transform(kernel: VolterraKernel, f: GridFunction) -> GridFunction:
    """f - int_0^x k(x, y) f(y) dy for a forward kernel, f + int l f for an inverse one."""
    _check_grid(kernel, f)
    integral = _weights(kernel) @ f.values
    sign = -1.0 if kernel.direction == "forward" else 1.0
    return f.with_values(f.values + sign * integral)


def inverse_volterra_transform(inverse: VolterraKernel, w: GridFunction) -> GridFunction:
    if inverse.direction != "inverse":
        raise ParameterError("expected an inverse kernel")
    return volterra_transform(inverse, w)


def boundary_weights(kernel: VolterraKernel, n_cells: Optional[int] = None) -> np.ndarray:
    """c_j with sum_j c_j u_j ~ int_0^1 k(1, y) u(y) dy (fourth-order weights).

    When ``n_cells`` differs from the kernel's, k(1, .) is interpolated onto
    that grid by a cubic spline.
    """
    row = kernel.at_one
    if n_cells is None or n_cells == kernel.n_cells:
        n_cells, vals = kernel.n_cells, row
    else:
        vals = CubicSpline(kernel.grid.nodes, row)(Grid(n_cells).nodes)
    table = kernels.segment_weight_table(n_cells + 1, 1.0 / n_cells)
    return table[-1] * vals


def control_law(kernel: VolterraKernel, state: GridFunction, d_now: float) -> float:
    """U = d + int_0^1 k(1, y) u(y) dy."""
    return float(d_now) + float(boundary_weights(kernel, state.grid.n_cells) @ state.values)


def control_law_shifted(kernel: VolterraKernel, state: GridFunction, d_now: float, m: float, mu: float) -> float:
    """U = exp(-m / 2 mu) (d + int_0^1 k(1, y) exp(m y / 2 mu) u(y) dy)."""
    r = m / (2.0 * mu)
    weighted = state.with_values(np.exp(r * state.grid.nodes) * state.values)
    return float(np.exp(-r) * control_law(kernel, weighted, d_now))


# ---------------------------------------------------------------------------
# Closed loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedLoopScenario:
    """A closed-loop run: plant, kernel pair, disturbances and discretization."""

    plant: ReactionParams
    kernel: VolterraKernel
    inverse: VolterraKernel
    actuator_disturbance: object
    in_domain: object
    u0: object
    target_n: float
    dt: float = 1e-3
    t_final: float = 5.0
    snapshot_stride: int = 10
    p: float = 4.0
    scenario: Optional[Scenario] = None

    def __post_init__(self):
        if self.kernel.n_cells != self.plant.a.grid.n_cells:
            raise DimensionError("kernel and plant must share one grid")
        if self.kernel.target_n != self.target_n or self.kernel.mu != self.plant.mu:
            raise ParameterError("kernel was built for different mu or target_n")

    @property
    def grid(self) -> Grid:
        return self.plant.a.grid

    @property
    def rate(self) -> float:
        """r with v = exp(r x) u advection-free."""
        return removal_rate(self.plant.m, self.plant.mu)

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "ClosedLoopScenario":
        if scenario.plant != "closed_loop":
            raise ParameterError("scenario plant must be 'closed_loop'")
        scenario.validate()
        grid = Grid(scenario.n_cells)
        shift = scenario.m**2 / (4.0 * scenario.mu)
        kernel_cells = scenario.kernel_cells or scenario.n_cells
        k = solve_kernel(target_n=scenario.target_n, n_cells=kernel_cells,
                         a=lambda y: np.asarray(scenario.a(y), float) + shift, mu=scenario.mu)
        k = k.subsample(scenario.n_cells)
        plant = ReactionParams(scenario.mu, grid.sample(scenario.a), scenario.m)
        cl = cls(plant, k, invert_kernel(k), scenario.d, scenario.f, scenario.u0,
                 scenario.target_n, scenario.dt, scenario.t_final, scenario.snapshot_stride,
                 scenario.p, scenario)
        if scenario.compatible_u0:
            cl = replace(cl, u0=compatible_profile(cl, scenario.u0))
        return cl

    def initial_control(self, u0=None) -> float:
        """U(0) produced by the feedback acting on the initial state."""
        grid = self.grid
        state = grid.sample(u0 or self.u0)
        d0 = eval_boundary(self.actuator_disturbance, 0.0)
        return control_law_shifted(self.kernel, state, d0, -self.plant.m, self.plant.mu)

    def validate(self):
        u0_left = float(self.u0(0.0))
        if abs(u0_left) > COMPAT_TOL:
            raise ParameterError(f"u0(0) = {u0_left:.3g}; the left boundary value is 0")
        if not self.dt > 0 or not self.t_final > 0:
            raise ParameterError("dt and t_final must be positive")
        u1, U0 = float(self.u0(1.0)), self.initial_control()
        if abs(u1 - U0) > COMPAT_TOL * max(1.0, abs(U0)):
            raise ParameterError(
                f"compatibility: u0(1) = {u1:.8g} but the feedback gives U(0) = {U0:.8g}; "
                "use compatible_profile() or set compatible_u0 = true"
            )


def compatible_profile(cl: ClosedLoopScenario, base):
    """``base + c x`` with c chosen so that u0(1) equals the initial control U(0)."""
    r = cl.rate
    grid = cl.grid
    lin = np.exp(-r) * boundary_weights(cl.kernel, grid.n_cells) * np.exp(r * grid.nodes)
    d0 = eval_boundary(cl.actuator_disturbance, 0.0)
    base_vals = np.asarray(base(grid.nodes), float)
    c = (np.exp(-r) * d0 + lin @ base_vals - float(base(1.0))) / (1.0 - lin @ grid.nodes)
    return base.combine(1.0, Profile.polynomial([0.0, c]), 1.0)


@dataclass
class ClosedLoopResult:
    u: object
    w: object
    kernel: VolterraKernel
    inverse: VolterraKernel
    controls: np.ndarray
    u_states: Optional[np.ndarray] = None
    w_states: Optional[np.ndarray] = None
    w_forcing: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)


def run_closed_loop(cl: ClosedLoopScenario, keep_states: bool = False) -> ClosedLoopResult:
    """Step the plant with the feedback evaluated implicitly at every step.

    The boundary value U^{n+1} enters the Crank-Nicolson solve and the
    control law at once; by linearity u^{n+1} = x0 + U x1 with x1 the unit
    boundary response, which gives U in closed form.  The transformed state
    w (of the advection-free variable) is recorded alongside u.
    """
    cl.validate()
    grid = cl.grid
    x = grid.nodes
    mu, m = cl.plant.mu, cl.plant.m
    r = cl.rate
    dt = cl.dt
    n_steps = int(round(cl.t_final / dt))
    stepper = LinearCN(grid, dt, mu, m, cl.plant.a.values)
    # U = e^{-r} (d + sum_j c_j e^{r y_j} u_j)
    c = np.exp(-r) * boundary_weights(cl.kernel) * np.exp(r * x)
    unit = stepper.unit_response()
    denom = 1.0 - float(c[1:-1] @ unit[1:-1]) - c[-1]
    if abs(denom) < 1e-12:
        raise ParameterError("feedback gain makes the boundary coupling singular")
    Wk = _weights(cl.kernel)
    ex = np.exp(r * x)

    def forcing(t):
        return np.zeros_like(x) if cl.in_domain.is_zero else np.asarray(cl.in_domain(x, t), float)

    def transformed(u):
        v = ex * u
        return v - Wk @ v

    u = np.asarray(cl.u0(x), dtype=float).copy()
    u[0] = 0.0
    d_now = eval_boundary(cl.actuator_disturbance, 0.0)
    u[-1] = control_law_shifted(cl.kernel, GridFunction(grid, u), d_now, -m, mu)
    f_now = forcing(0.0)
    fw_now = transformed(f_now)
    rec_u = _Recorder(grid, n_steps, cl.snapshot_stride)
    rec_w = _Recorder(grid, n_steps, cl.snapshot_stride)
    rec_u.record(0, 0.0, u, u[-1], f_now, dt)
    w = transformed(u)
    rec_w.record(0, 0.0, w, d_now, fw_now, dt)
    controls = np.empty(n_steps + 1)
    controls[0] = u[-1]
    u_states = [u.copy()] if keep_states else None
    w_states = [w.copy()] if keep_states else None
    fw_states = [fw_now.copy()] if keep_states else None

    for i in range(n_steps):
        t_next = (i + 1) * dt
        d_next = eval_boundary(cl.actuator_disturbance, t_next)
        f_next = forcing(t_next)
        x0 = stepper.solve(stepper.explicit_rhs(u, 0.5 * (f_now[1:-1] + f_next[1:-1])), 0.0)
        U = (np.exp(-r) * d_next + float(c[1:-1] @ x0[1:-1])) / denom
        u = x0 + U * unit
        _check_finite(u, t_next)
        w = transformed(u)
        fw_next = transformed(f_next)
        controls[i + 1] = U
        rec_u.record(i + 1, t_next, u, U, f_next, dt)
        rec_w.record(i + 1, t_next, w, d_next, fw_next, dt)
        if keep_states:
            u_states.append(u.copy())
            w_states.append(w.copy())
            fw_states.append(fw_next.copy())
        f_now = f_next

    meta = dict(kernel_iterations=cl.kernel.iterations, inverse_iterations=cl.inverse.iterations)
    sc = cl.scenario
    u_traj = rec_u.finish(plant="closed_loop", role="full", scenario=sc, meta=dict(meta, controls=controls))
    w_traj = rec_w.finish(plant="closed_loop", role="target", scenario=sc, meta=dict(meta))
    stack = (lambda s: np.array(s)) if keep_states else (lambda s: None)
    return ClosedLoopResult(u_traj, w_traj, cl.kernel, cl.inverse, controls,
                            stack(u_states), stack(w_states), stack(fw_states), meta)


def run_closed_loop_scenario(scenario: Scenario, keep_states: bool = False):
    """(u trajectory, w trajectory, result) for a ``closed_loop`` scenario."""
    res = run_closed_loop(ClosedLoopScenario.from_scenario(scenario), keep_states)
    return res.u, res.w, res


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def w0_constant(kernel: VolterraKernel) -> float:
    """C with ||w0||_H1 <= C ||u0||_H1.

    From (K u0)_x = k(x, x) u0(x) + int_0^x k_x u0 and max|u0| <= sqrt(2) ||u0||_H1:
    C = 1 + max|k| + sqrt(2) max|k(x, x)| + max|k_x|.
    """
    return 1.0 + kernel.max_abs + np.sqrt(2.0) * kernel.max_diag + kernel.max_dx


def lift_constant(inverse: VolterraKernel) -> float:
    """1 + max|l|, the factor from max|w| to max|u|."""
    return 1.0 + inverse.max_abs


def verify_closed_loop_iss(u_traj, w_traj, kernel: VolterraKernel, inverse: VolterraKernel,
                           mu: float, target_n: float, p: float = 4.0, m: float = 0.0,
                           rel_tol: float = CL_TOL, abs_tol: float = 1e-6) -> dict:
    """Verdicts ``CL-w``, ``CL-u`` and ``CL-w0`` for one closed-loop run.

    ``CL-w`` compares max|w| with the transport bound for the target system
    (advection-free, reaction n).  ``CL-u`` lifts it with 1 + max|l| and the
    initial-data constant from :func:`w0_constant`, and undoes the
    exponential transform with exp(|m| / 2 mu).  Disturbance sizes are those
    recorded on the w trajectory, so the forcing term uses f_w.
    """
    params = EnvelopeParams(mu=mu, m=0.0, n=target_n, p=p)
    t = w_traj.times
    w0 = norms(w_traj.initial)
    env_w = envelope_T6i(params.with_u0(w0), w_traj, t)
    vw = make_verdict("CL-w", t, env_w, w_traj.linf, rel_tol, abs_tol,
                      notes=[f"target rate n + 2 mu = {target_n + 2 * mu:.4g}"])

    r = removal_rate(m, mu)
    # u0 of the advection-free variable
    v0 = u_traj.initial.with_values(np.exp(r * u_traj.grid.nodes) * u_traj.initial.values)
    c_w0 = w0_constant(kernel)
    c_l = lift_constant(inverse)
    scale = np.exp(abs(r))
    env_u = scale * c_l * envelope_T6i(params.with_u0(_scaled_norms(norms(v0), c_w0)), w_traj, t)
    vu = make_verdict("CL-u", t, env_u, u_traj.linf, rel_tol, abs_tol,
                      notes=[f"C_w0 = {c_w0:.4g}", f"1 + max|l| = {c_l:.4g}"])

    lhs, rhs = w0.h1, c_w0 * norms(v0).h1
    v0c = make_verdict("CL-w0", np.zeros(1), [rhs], [lhs], rel_tol, abs_tol,
                       notes=[f"||w0||_H1 = {lhs:.4g}", f"C ||u0||_H1 = {rhs:.4g}"])
    return {"CL-w": vw, "CL-u": vu, "CL-w0": v0c}


def _scaled_norms(nt, c):
    return NormTriple(c * nt.l2, c * nt.h1, c * nt.linf)


def fit_decay_rate(times, values, start_fraction: float = 0.25, floor: float = 1e-12) -> float:
    """Least-squares slope of -log(values) over the tail of the run."""
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    mask = (times >= start_fraction * times[-1]) & (values > floor)
    if mask.sum() < 2:
        raise ParameterError("not enough samples above the floor to fit a decay rate")
    slope = np.polyfit(times[mask], np.log(values[mask]), 1)[0]
    return float(-slope)


def kernel_pde_residual(kernel: VolterraKernel, a, mu: float | None = None) -> float:
    """max |mu (k_xx - k_yy) - (n - a(y)) k| over interior nodes, fourth-order differences."""
    mu = kernel.mu if mu is None else mu
    K = kernel.values
    N, h = kernel.n_cells, kernel.h
    y = kernel.grid.nodes
    a_of = _reaction_sampler(a)
    lam = kernel.target_n - np.asarray(a_of(y), float)
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    worst = 0.0
    for i in range(2, N - 1):
        for j in range(2, i - 3):
            kxx = c @ K[i - 2:i + 3, j]
            kyy = c @ K[i, j - 2:j + 3]
            worst = max(worst, abs(mu * (kxx - kyy) - lam[j] * K[i, j]))
    return worst


def target_residual(w_states, fw_states, times, mu: float, target_n: float, h: float) -> tuple:
    """(residual, truncation estimate) of the target dynamics on recorded w states.

    The residual is that of the Crank-Nicolson form of
    w_t = mu w_xx - n w + f_w at interior nodes.  The truncation estimate is
    h^2/12 max|mu w_xxxx| + dt^2/12 max|w_ttt| from finite differences.
    """
    W = np.asarray(w_states, float)
    F = np.asarray(fw_states, float)
    dt = float(times[1] - times[0])
    lap = (W[:, 2:] - 2 * W[:, 1:-1] + W[:, :-2]) / h**2
    op = mu * lap - target_n * W[:, 1:-1] + F[:, 1:-1]
    res = (W[1:, 1:-1] - W[:-1, 1:-1]) / dt - 0.5 * (op[1:] + op[:-1])
    w4 = (W[:, 4:] - 4 * W[:, 3:-1] + 6 * W[:, 2:-2] - 4 * W[:, 1:-3] + W[:, :-4]) / h**4
    wt3 = (W[3:] - 3 * W[2:-1] + 3 * W[1:-2] - W[:-3]) / dt**3
    est = h * h / 12.0 * mu * float(np.max(np.abs(w4))) + dt * dt / 12.0 * float(np.max(np.abs(wt3)))
    return float(np.max(np.abs(res))), est
