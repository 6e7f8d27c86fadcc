import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from isslab.backstepping import (
    ClosedLoopScenario,
    VolterraKernel,
    compatible_profile,
    control_law,
    control_law_shifted,
    fit_decay_rate,
    invert_kernel,
    inverse_volterra_transform,
    kernel_pde_residual,
    lift_constant,
    run_closed_loop,
    run_closed_loop_scenario,
    solve_kernel,
    target_residual,
    verify_closed_loop_iss,
    volterra_transform,
    w0_constant,
)
from isslab.bessel import bessel_i1, bessel_kernel, bessel_kernel_grid, i1_over_z
from isslab.errors import ParameterError
from isslab.grid import Grid
from isslab.inequalities import random_smooth_function
from isslab.scenario import Scenario
from isslab.signals import BoundarySignal, FieldSignal, Profile


@pytest.fixture(scope="module")
def anti_stable():
    k = solve_kernel(a=-1.0, mu=1.0, target_n=1.0, n_cells=128)
    return k, invert_kernel(k)


def test_bessel_series_matches_scipy():
    z = np.linspace(0.0, 12.0, 61)
    assert np.allclose(bessel_i1(z), special.i1(z), rtol=1e-14, atol=1e-300)
    assert i1_over_z(0.0) == pytest.approx(0.5)
    # negative argument continues to J1: I1(iz)/(iz) = J1(z)/z
    assert i1_over_z(-4.0 / 4.0) == pytest.approx(special.jv(1, 2.0) / 2.0, rel=1e-13)


def test_bessel_kernel_satisfies_trace():
    x = np.linspace(0, 1, 11)
    assert np.allclose(bessel_kernel(x, x, 3.0), -1.5 * x)
    assert np.all(bessel_kernel(x, 0.0 * x, 3.0) == 0)


def test_kernel_vanishes_when_plant_is_target():
    k = solve_kernel(a=0.7, mu=1.3, target_n=0.7, n_cells=32)
    assert np.max(np.abs(k.values)) == 0.0
    assert np.max(np.abs(invert_kernel(k).values)) == 0.0


@pytest.mark.parametrize("lam,n,a", [(1.0, 1.0, 0.0), (2.0, 1.0, -1.0), (-3.0, 0.0, 3.0)])
def test_kernel_matches_bessel(lam, n, a):
    k = solve_kernel(a=a, mu=1.0, target_n=n, n_cells=128)
    assert np.max(np.abs(k.values - bessel_kernel_grid(128, lam))) <= 1e-8
    assert np.allclose(k.diagonal, -lam * k.grid.nodes / 2, atol=1e-6)
    assert np.all(k.values[:, 0] == 0.0)


def test_kernel_trace_for_variable_a():
    a = Profile.polynomial((-1.0, 2.0, -3.0))
    k = solve_kernel(a=a, mu=0.8, target_n=0.5, n_cells=64)
    x = k.grid.nodes
    trace = -(0.5 * x - (-x + x ** 2 - x ** 3)) / (2 * 0.8)
    assert np.max(np.abs(k.diagonal - trace)) <= 1e-6
    assert kernel_pde_residual(k, a) <= 1e-6


def test_kernel_pde_residual_constant(anti_stable):
    k, _ = anti_stable
    assert kernel_pde_residual(k, -1.0) <= 1e-6


def test_round_trip(anti_stable, rng):
    k, l_ = anti_stable
    g = Grid(k.n_cells)
    worst = 0.0
    for _ in range(50):
        f = g.sample(random_smooth_function(rng))
        back = inverse_volterra_transform(l_, volterra_transform(k, f))
        worst = max(worst, np.max(np.abs(back.values - f.values)))
    assert worst <= 1e-6


def test_inverse_of_constant_kernel_is_bessel_j(anti_stable):
    # l for constant lambda is -lam y J1(z)/z with z = sqrt(lam (x^2 - y^2))
    _, l_ = anti_stable
    X, Y = np.meshgrid(l_.grid.nodes, l_.grid.nodes, indexing="ij")
    z = np.sqrt(np.maximum(2.0 * (X * X - Y * Y), 0.0))
    j1_over_z = np.where(z > 0, special.jv(1, z) / np.where(z > 0, z, 1.0), 0.5)
    ref = np.where(Y <= X, -2.0 * Y * j1_over_z, 0.0)
    assert np.max(np.abs(l_.values - ref)) <= 1e-6
    assert lift_constant(l_) == pytest.approx(1 + np.abs(ref).max(), abs=1e-6)


def test_control_law_examples(anti_stable):
    k, _ = anti_stable
    g = Grid(k.n_cells)
    assert control_law(k, g.zeros(), 0.0) == 0.0
    zero_k = VolterraKernel(k.n_cells, np.zeros_like(k.values))
    assert control_law(zero_k, g.sample(np.sin), 0.3) == 0.3
    assert control_law_shifted(k, g.zeros(), 1.0, 2.0, 1.0) == pytest.approx(math.exp(-1.0))
    u = g.sample(lambda x: np.sin(np.pi * x) + x)
    assert control_law_shifted(k, u, 0.2, 0.0, 1.0) == pytest.approx(control_law(k, u, 0.2), abs=1e-15)


def test_control_law_refinement_oracle(anti_stable):
    k, _ = anti_stable
    fn = lambda y: np.sin(np.pi * y) + y ** 2  # noqa: E731
    exact, _ = integrate.quad(lambda y: bessel_kernel(1.0, y, 2.0) * fn(y), 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    U = control_law(k, Grid(k.n_cells).sample(fn), 0.0)
    assert U == pytest.approx(exact, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 3), st.floats(-2, 2))
def test_shifted_law_with_zero_state(m, mu, d):
    k = VolterraKernel(8, np.tril(np.ones((9, 9))))
    assert control_law_shifted(k, Grid(8).zeros(), d, m, mu) == pytest.approx(math.exp(-m / (2 * mu)) * d)


def test_constants():
    k = solve_kernel(a=-10.0, mu=1.0, target_n=3.0, n_cells=64)
    assert k.max_diag == pytest.approx(6.5, rel=1e-9)
    assert w0_constant(k) == pytest.approx(1 + k.max_abs + math.sqrt(2) * 6.5 + k.max_dx)


def _anti_stable_scenario(**kw):
    base = dict(plant="closed_loop", mu=1.0, a=Profile.constant(-1.0), target_n=1.0,
                u0=Profile.sine_mode(1.0), t_final=3.0, compatible_u0=True)
    base.update(kw)
    return Scenario(**base)


def test_zero_closed_loop():
    u, w, _ = run_closed_loop_scenario(_anti_stable_scenario(u0=Profile.zero(), t_final=0.2))
    assert np.all(u.linf == 0) and np.all(w.linf == 0)


def test_closed_loop_decay_rate():
    u, w, res = run_closed_loop_scenario(_anti_stable_scenario())
    assert fit_decay_rate(u.times, u.linf) >= 0.9 * (1.0 + 2.0)
    verdicts = verify_closed_loop_iss(u, w, res.kernel, res.inverse, 1.0, 1.0)
    assert all(v.passed for v in verdicts.values())


def test_incompatible_start_rejected():
    sc = _anti_stable_scenario(compatible_u0=False, u0=Profile.sine_mode(1.0, 1, 0.2))
    with pytest.raises(ParameterError, match="compatibility"):
        run_closed_loop(ClosedLoopScenario.from_scenario(sc))


def test_compatible_profile_matches_control():
    sc = _anti_stable_scenario(compatible_u0=False, d=BoundarySignal.sinusoid(0.1, 1.0, offset=0.1))
    cl = ClosedLoopScenario.from_scenario(sc)
    prof = compatible_profile(cl, Profile.sine_mode(1.0))
    assert float(prof(1.0)) == pytest.approx(cl.initial_control(prof), abs=1e-12)


@pytest.mark.parametrize("m", [0.0, 2.0])
def test_disturbed_closed_loop(m):
    sc = _anti_stable_scenario(m=m, u0=Profile.polynomial((0.0, 1.0)), d=BoundarySignal.sinusoid(0.05, 1.0),
                               f=FieldSignal.separable(Profile.sine_mode(0.2), BoundarySignal.sinusoid(1.0, 3.0)),
                               t_final=4.0)
    u, w, res = run_closed_loop_scenario(sc, keep_states=True)
    verdicts = verify_closed_loop_iss(u, w, res.kernel, res.inverse, 1.0, 1.0, m=m)
    assert {k: v.status for k, v in verdicts.items()} == {"CL-w": "pass", "CL-u": "pass", "CL-w0": "pass"}
    resid, est = target_residual(res.w_states, res.w_forcing, u.times, 1.0, 1.0, u.grid.h)
    assert resid <= 10 * est


def test_actuator_disturbance_settles():
    sc = _anti_stable_scenario(d=BoundarySignal.sinusoid(0.05, 1.0), t_final=6.0)
    u, w, res = run_closed_loop_scenario(sc)
    C = lift_constant(res.inverse) * math.exp(0.0)
    tail = u.linf[u.times >= 4.0]
    assert tail.max() <= C * 0.05 + 1e-3


def test_kernel_csv(tmp_path):
    k = solve_kernel(a=-1.0, mu=1.0, target_n=1.0, n_cells=4)
    path = tmp_path / "k.csv"
    k.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,k" and len(lines) == 1 + 15


def test_kernel_iteration_budget():
    from isslab.errors import ConvergenceError

    with pytest.raises(ConvergenceError):
        solve_kernel(a=-10.0, mu=1.0, target_n=3.0, n_cells=32, max_iter=1)
    k = solve_kernel(a=-10.0, mu=1.0, target_n=3.0, n_cells=32)
    with pytest.raises(ConvergenceError):
        invert_kernel(k, max_iter=1)


def test_zero_kernel_reduces_to_open_loop_transport():
    from isslab.envelopes import params_from_scenario, verify
    from isslab.solvers import simulate

    u0, d = Profile.sine_mode(1.0), BoundarySignal.sinusoid(0.1, 2.0)
    cl = Scenario(plant="closed_loop", mu=1.0, a=Profile.constant(1.0), target_n=1.0, u0=u0, d=d,
                  n_cells=50, dt=2e-3, t_final=1.0)
    u, w, res = run_closed_loop_scenario(cl)
    assert res.kernel.max_abs == 0.0
    assert np.array_equal(u.linf, w.linf)
    open_loop = Scenario(mu=1.0, n=1.0, u0=u0, d=d, n_cells=50, dt=2e-3, t_final=1.0)
    tr = simulate(open_loop)
    assert np.allclose(tr.linf, w.linf, atol=1e-12)
    ref = verify(tr, "T6i", params_from_scenario(open_loop))
    got = verify_closed_loop_iss(u, w, res.kernel, res.inverse, 1.0, 1.0)["CL-w"]
    assert got.status == ref.status == "pass"
    assert np.allclose(got.envelope_values, ref.envelope_values, rtol=1e-12)
