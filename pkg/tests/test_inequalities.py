import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isslab.errors import ParameterError
from isslab.grid import Grid
from isslab.inequalities import (
    SineSeries,
    check_gronwall,
    check_poincare,
    check_sobolev_lp,
    check_sobolev_point,
    check_young,
    differential_inequality_holds,
    gronwall_bound,
    random_smooth_function,
    run_battery,
)

FINE = Grid(2000)


def test_poincare_examples():
    assert check_poincare(FINE.zeros()) == (0.0, 0.0, True)
    lhs, rhs, ok = check_poincare(FINE.sample(lambda x: np.sin(np.pi * x)))
    assert lhs == pytest.approx(0.5, rel=1e-5) and rhs == pytest.approx(np.pi ** 2 / 4, rel=1e-5) and ok
    lhs, rhs, ok = check_poincare(FINE.sample(lambda x: x))
    assert lhs == pytest.approx(1 / 3, rel=1e-5) and rhs == pytest.approx(0.5) and ok


def test_poincare_precondition():
    with pytest.raises(ParameterError):
        check_poincare(FINE.sample(lambda x: x + 1.0))


def test_poincare_extremal_ratio():
    lhs, rhs, ok = check_poincare(FINE.sample(lambda x: np.sin(np.pi * x / 2)))
    assert ok and lhs / rhs == pytest.approx(8 / np.pi ** 2, rel=1e-5)
    assert lhs / rhs < 1


def test_sobolev_point_examples():
    lhs, rhs, ok = check_sobolev_point(FINE.sample(lambda x: np.ones_like(x)), 1000)
    assert (lhs, ok) == (1.0, True) and rhs == pytest.approx(2.0)
    lhs, rhs, ok = check_sobolev_point(FINE.sample(lambda x: x), 2000)
    assert lhs == 1.0 and rhs == pytest.approx(5 / 3, rel=1e-6) and ok
    lhs, rhs, ok = check_sobolev_point(FINE.sample(lambda x: np.sin(np.pi * x)), 1000)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1 + np.pi ** 2 / 2, rel=1e-5) and ok


def test_sobolev_lp_examples():
    lhs, rhs, ok = check_sobolev_lp(FINE.sample(lambda x: np.ones_like(x)), 2)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(math.sqrt(2)) and ok
    lhs, rhs, ok = check_sobolev_lp(FINE.sample(lambda x: x), 4)
    assert lhs == pytest.approx(0.2 ** 0.25, rel=1e-5) and rhs == pytest.approx(math.sqrt(5 / 3), rel=1e-6) and ok
    lhs, rhs, ok = check_sobolev_lp(FINE.sample(lambda x: np.sin(np.pi * x)), 1)
    assert lhs == pytest.approx(2 / np.pi, rel=1e-5) and rhs == pytest.approx(math.sqrt(1 + np.pi ** 2 / 2), rel=1e-5)
    assert ok


def test_gronwall_examples():
    t = np.linspace(0, 2, 2001)
    y = np.exp(-t)
    obs, bound, ok = check_gronwall(y, -np.ones_like(t), np.zeros_like(t), t)
    assert ok and np.max(np.abs(bound - y)) <= 1e-6
    assert np.all(gronwall_bound(0.0, np.ones_like(t), np.zeros_like(t), t) == 0)
    assert np.allclose(gronwall_bound(0.0, np.zeros_like(t), np.ones_like(t), t), t, atol=1e-14)


def test_gronwall_detects_violation():
    t = np.linspace(0, 1, 101)
    _, _, ok = check_gronwall(np.exp(t), -np.ones_like(t), np.zeros_like(t), t)
    assert not ok
    assert not differential_inequality_holds(np.exp(t), -np.ones_like(t), np.zeros_like(t), t)


def test_gronwall_on_solver_energy():
    """A heat-mode energy satisfies dy/dt <= -2 pi^2 y, so it stays below y0 e^{-2 pi^2 t}."""
    from isslab.scenario import Scenario
    from isslab.signals import Profile
    from isslab.solvers import simulate

    tr = simulate(Scenario(u0=Profile.sine_mode(1.0, 1), t_final=0.3))
    y = tr.l2 ** 2
    g = np.full_like(y, -2 * np.pi ** 2)
    h = np.zeros_like(y)
    assert differential_inequality_holds(y, g, h, tr.times, tol=1e-3)
    assert check_gronwall(y, g, h, tr.times)[2]


def test_young_examples():
    assert check_young(0, 0, 1)
    assert check_young(1, 1, 1)
    assert check_young(2, 3, 0.5)
    with pytest.raises(ParameterError):
        check_young(-1, 1, 1)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(1e-3, 1e3))
def test_young_property(a, b, eps):
    assert check_young(a, b, eps)


def test_random_functions_vanish_at_ends(rng):
    for _ in range(20):
        fn = random_smooth_function(rng)
        assert isinstance(fn, SineSeries)
        assert abs(fn(np.array([0.0]))[0]) < 1e-12 and abs(fn(np.array([1.0]))[0]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_random_function_passes_every_check(seed):
    rng = np.random.default_rng(seed)
    fn = random_smooth_function(rng)
    f = Grid(200).sample(fn)
    assert check_poincare(f, 0, refine=fn).holds
    assert check_sobolev_point(f, int(rng.integers(0, 201)), refine=fn).holds
    for p in (1, 2, 4, 10):
        assert check_sobolev_lp(f, p, refine=fn).holds


def test_battery_small():
    res = run_battery(n_trials=100, seed=3)
    assert res.passed and res.checks["poincare"] == 100
