import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isslab.errors import ParameterError
from isslab.grid import Grid, GridFunction
from isslab.scenario import Scenario
from isslab.signals import BoundarySignal, FieldSignal, Profile, eval_boundary
from isslab.solvers import simulate
from isslab.splitting import (
    ExpTransform,
    exp_transform,
    removal_rate,
    simulate_split,
    split,
    transformed_scenario,
    verify_superposition,
)


def test_exp_transform_identity_when_m_zero(rng):
    f = GridFunction(Grid(20), rng.normal(size=21))
    assert np.array_equal(exp_transform(f, ExpTransform(0.0, 1.0)).values, f.values)


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 5), st.integers(0, 2 ** 31))
def test_exp_transform_round_trip(m, mu, seed):
    f = GridFunction(Grid(32), np.random.default_rng(seed).normal(size=33))
    xf = ExpTransform(m, mu)
    back = exp_transform(exp_transform(f, xf), xf.inverse)
    assert np.allclose(back.values, f.values, rtol=1e-13, atol=1e-13)


def test_exp_transform_value_at_one():
    g = Grid(10)
    out = exp_transform(g.sample(lambda x: np.ones_like(x)), ExpTransform(2.0, 1.0))
    assert out.values[-1] == pytest.approx(math.e, rel=1e-15)


def test_removal_rate_sign():
    assert removal_rate(2.0, 1.0) == -1.0
    assert ExpTransform(2.0, 1.0).shifted_n == 1.0


def test_transform_conjugation():
    """Stepping the advection-free system and mapping back matches direct stepping."""
    errs = []
    for N in (50, 100):
        sc = Scenario(m=2.0, n=0.5, u0=Profile.sine_mode(1.0, 1, 0.1),
                      d=BoundarySignal.sinusoid(0.2, 2.0, offset=0.1),
                      f=FieldSignal.separable(Profile.sine_mode(1.0)), t_final=0.5, n_cells=N, dt=1.0 / N)
        direct, tilde = simulate(sc), simulate(transformed_scenario(sc))
        x = direct.grid.nodes
        errs.append(np.max(np.abs(direct.snapshots - np.exp(x * sc.m / (2 * sc.mu)) * tilde.snapshots)))
    # both discretizations are second order; the gap shrinks accordingly
    assert errs[1] < errs[0] / 2.5
    assert errs[1] < 1e-4


def test_split_transport_structure():
    sc = Scenario(u0=Profile.sine_mode(1.0), d=BoundarySignal.sinusoid(0.1, 1.0))
    pair = split(sc)
    assert pair.subsystem_w.u0 == sc.u0 and pair.subsystem_w.d == BoundarySignal.zero()
    assert pair.subsystem_v.u0 == Profile.zero() and pair.subsystem_v.d == sc.d
    assert pair.subsystem_w.f.is_zero and pair.subsystem_v.f.is_zero
    assert not pair.coupled


def test_split_zero_disturbance_gives_zero_v():
    pair = split(Scenario(u0=Profile.sine_mode(1.0)))
    v = pair.subsystem_v
    assert v.u0 == Profile.zero() and v.d == BoundarySignal.zero() and v.f.is_zero


def test_split_burgers_structure():
    f = FieldSignal.separable(Profile.sine_mode(0.1))
    sc = Scenario(plant="burgers", u0=Profile.sine_mode(0.3), d=BoundarySignal.sinusoid(0.1, 1.0), f=f)
    pair = split(sc)
    assert pair.placement == "w" and pair.coupled
    assert pair.subsystem_w.u0 == Profile.zero() and pair.subsystem_w.d == sc.d and pair.subsystem_w.f == f
    assert pair.subsystem_v.u0 == sc.u0 and pair.subsystem_v.d == BoundarySignal.zero()
    pair_v = split(sc, "v")
    assert pair_v.subsystem_v.f == f and pair_v.subsystem_w.f.is_zero


def test_split_requires_vanishing_d0():
    sc = Scenario(u0=Profile.polynomial((0.0, 0.2)), d=BoundarySignal.constant(0.2))
    with pytest.raises(ParameterError):
        split(sc)


def test_superposition_zero():
    sc = Scenario(t_final=0.1)
    w, v = simulate_split(split(sc))
    assert verify_superposition(simulate(sc), w, v) == 0.0


def test_superposition_generic():
    sc = Scenario(m=-1.0, n=0.4, u0=Profile.sine_mode(0.7, 2), d=BoundarySignal.sinusoid(0.3, 5.0),
                  f=FieldSignal.separable(Profile.constant(1.0), BoundarySignal.sinusoid(1.0, 2.0)),
                  n_cells=100, dt=1e-3, t_final=1.0)
    w, v = simulate_split(split(sc))
    assert verify_superposition(simulate(sc), w, v) <= 1e-9


def test_superposition_refuses_burgers():
    sc = Scenario(plant="burgers", t_final=0.1)
    w, v = simulate_split(split(sc))
    with pytest.raises(ParameterError):
        verify_superposition(simulate(sc), w, v)


def test_burgers_split_reassembles():
    sc = Scenario(plant="burgers", nu=2.0, u0=Profile.sine_mode(0.5), d=BoundarySignal.sinusoid(0.2, 2.0),
                  t_final=1.0, snapshot_stride=1)
    u = simulate(sc)
    for placement in ("w", "v"):
        w, v = simulate_split(split(sc, placement))
        assert np.max(np.abs(u.snapshots - w.snapshots - v.snapshots)) < 1e-8


def test_split_boundary_data_sum():
    sc = Scenario(u0=Profile.sine_mode(1.0), d=BoundarySignal.sinusoid(0.4, 3.0))
    pair = split(sc)
    for t in (0.0, 0.3, 1.7):
        total = eval_boundary(pair.subsystem_w.d, t) + eval_boundary(pair.subsystem_v.d, t)
        assert total == eval_boundary(sc.d, t)
    x = np.linspace(0, 1, 9)
    assert np.allclose(pair.subsystem_w.u0(x) + pair.subsystem_v.u0(x), sc.u0(x))
