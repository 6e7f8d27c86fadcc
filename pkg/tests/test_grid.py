import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isslab.errors import DimensionError
from isslab.grid import (
    Grid,
    GridFunction,
    central_derivative,
    norms,
    trapezoid_integral,
)


def test_nodes_hit_endpoints_exactly():
    for n in (1, 7, 200, 1023):
        g = Grid(n)
        assert g.nodes[0] == 0.0
        assert g.nodes[-1] == 1.0
        assert g.size == n + 1
        # spacing is checked node-wise: each node equals i*h to 1e-14 relative
        i = np.arange(g.size)
        assert np.allclose(g.nodes[1:], i[1:] * g.h, rtol=1e-14, atol=0)
        assert np.all(np.diff(g.nodes) > 0)


def test_values_length_checked():
    with pytest.raises((DimensionError, ValueError)):
        GridFunction(Grid(10), np.zeros(5))


@pytest.mark.parametrize("n", [1, 10, 57])
def test_integral_of_constant(n):
    assert trapezoid_integral(Grid(n).sample(lambda x: np.ones_like(x))) == pytest.approx(1.0, abs=1e-15)


def test_integral_of_identity_exact():
    assert trapezoid_integral(Grid(10).sample(lambda x: x)) == pytest.approx(0.5, abs=1e-15)


def test_integral_of_sine():
    val = trapezoid_integral(Grid(200).sample(lambda x: np.sin(np.pi * x)))
    assert abs(val - 2 / np.pi) < 1e-4


def test_derivative_of_constant_and_affine():
    g = Grid(30)
    assert np.all(central_derivative(g.sample(lambda x: 0 * x + 4.0)).values == 0.0)
    assert np.allclose(central_derivative(g.sample(lambda x: 3 * x)).values, 3.0, atol=1e-12)


def test_derivative_of_square_at_midpoint():
    g = Grid(50)
    d = central_derivative(g.sample(lambda x: x * x))
    assert d.values[25] == pytest.approx(1.0, abs=1e-10)


def test_norms_zero():
    n = norms(Grid(20).zeros())
    assert (n.l2, n.h1, n.linf) == (0.0, 0.0, 0.0)


def test_norms_sine():
    n = norms(Grid(400).sample(lambda x: np.sin(np.pi * x)))
    assert abs(n.l2 - math.sqrt(0.5)) < 1e-4
    assert abs(n.linf - 1.0) < 1e-4


def test_norms_identity():
    n = norms(Grid(400).sample(lambda x: x))
    assert n.linf == 1.0
    assert abs(n.l2 - 1 / math.sqrt(3)) < 1e-3


def test_derivative_refinement_order():
    errs = []
    for n in (40, 80, 160):
        g = Grid(n)
        d = central_derivative(g.sample(lambda x: np.sin(3 * x)))
        err = d.values - 3 * np.cos(3 * g.nodes)
        errs.append(np.sqrt(trapezoid_integral(GridFunction(g, err * err))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders >= 1.8) & (orders <= 2.2)), orders


coeffs = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=5)


def _series(cs):
    return lambda x: sum(c * np.sin((k + 1) * x + 0.3 * k) for k, c in enumerate(cs))


@settings(max_examples=60, deadline=None)
@given(coeffs, st.integers(2, 300))
def test_norm_ordering(cs, n):
    f = Grid(n).sample(_series(cs))
    nt = norms(f)
    assert nt.l2 <= nt.linf * (1 + 1e-12) + 1e-300
    assert nt.h1 >= nt.l2


@settings(max_examples=60, deadline=None)
@given(coeffs, coeffs, st.floats(-3, 3), st.floats(-3, 3))
def test_integral_linear(c1, c2, a, b):
    g = Grid(64)
    f1, f2 = g.sample(_series(c1)), g.sample(_series(c2))
    lhs = trapezoid_integral(GridFunction(g, a * f1.values + b * f2.values))
    rhs = a * trapezoid_integral(f1) + b * trapezoid_integral(f2)
    scale = abs(a) * np.abs(f1.values).max() + abs(b) * np.abs(f2.values).max() + 1.0
    assert abs(lhs - rhs) <= 1e-12 * scale
