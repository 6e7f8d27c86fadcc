"""The numba-compiled loops and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from isslab import kernels


def test_tridiag_twins(rng):
    n = 50
    lower, upper = rng.uniform(-1, 0, n), rng.uniform(-1, 0, n)
    diag = 3.0 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=n)
    x1 = kernels.tridiag_solve_loops(lower, diag, upper, rhs)
    x2 = kernels.tridiag_solve_numpy(lower, diag, upper, rhs)
    A = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
    assert np.allclose(A @ x1, rhs, atol=1e-12)
    assert np.allclose(x1, x2, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 17])
def test_cumulative_twins(n, rng):
    g = rng.normal(size=n)
    assert np.allclose(kernels.cumulative_integral_loops(g, 0.1), kernels.cumulative_integral_numpy(g, 0.1), atol=1e-14)


def test_cumulative_exact_for_cubics():
    x = np.linspace(0, 1, 21)
    cum = kernels.cumulative_integral_numpy(x ** 3 - 2 * x, x[1])
    assert np.allclose(cum, x ** 4 / 4 - x ** 2, atol=1e-14)


def test_segment_table_matches_cumulative(rng):
    n, h = 12, 0.05
    table = kernels.segment_weight_table(n, h)
    g = rng.normal(size=n)
    for r in range(n):
        ref = kernels.cumulative_integral_numpy(g[: r + 1], h)[-1]
        assert table[r, : r + 1] @ g[: r + 1] == pytest.approx(ref, abs=1e-14)
    assert not table.flags.writeable


def test_kernel_sweep_twins(rng):
    N = 8
    P = 2 * N + 1
    G = np.tril(rng.normal(size=(P, P)))
    G0 = np.tril(rng.normal(size=(P, P)))
    lam = rng.normal(size=P)
    a, da = kernels.kernel_sweep_loops(G, G0, lam, 1.0 / N)
    b, db = kernels.kernel_sweep_numpy(G, G0, lam, 1.0 / N)
    mask = np.zeros((P, P), bool)
    for p in range(P):
        for q in range(min(p, P - 1 - p) + 1):
            mask[p, q] = True
    assert np.allclose(a[mask], b[mask], atol=1e-13)


def test_inverse_sweep_twins(rng):
    n = 10
    K = np.tril(rng.normal(size=(n, n)))
    L = np.tril(rng.normal(size=(n, n)))
    table = kernels.segment_weight_table(n, 0.1)
    a, da = kernels.inverse_sweep_loops(L, K, table)
    b, db = kernels.inverse_sweep_numpy(L, K, table)
    assert np.allclose(a, b, atol=1e-13)
    assert da == pytest.approx(db, abs=1e-13)


def test_level_measure_twins(rng):
    v = rng.normal(size=41)
    levels = np.linspace(-2, 2, 17)
    m1, e1 = kernels.level_measures_loops(v, levels, 0.025)
    m2, e2 = kernels.level_measures_numpy(v, levels, 0.025)
    assert np.allclose(m1, m2, atol=1e-14) and np.allclose(e1, e2, atol=1e-14)


def test_level_measure_of_identity():
    x = np.linspace(0, 1, 201)
    m, e = kernels.level_measures_numpy(x, np.array([0.5]), x[1])
    assert m[0] == pytest.approx(0.5, abs=1e-12)


def test_numpy_backend_selected_by_env():
    code = (
        "import isslab, isslab.kernels as k;"
        "print(isslab.backend_name(), k.tridiag_solve is k.tridiag_solve_numpy)"
    )
    env = dict(os.environ, ISSLAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]


def test_fallback_pipeline_matches_default():
    """A short transport run gives the same norms on either backend."""
    code = (
        "from isslab import Scenario, BoundarySignal, simulate;"
        "t = simulate(Scenario(d=BoundarySignal.sinusoid(0.2, 3.0), n_cells=40, t_final=0.2));"
        "print(repr(float(t.l2[-1])), repr(float(t.h1[-1])))"
    )
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, ISSLAB_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        outs.append([float(v) for v in res.stdout.split()])
    assert np.allclose(outs[0], outs[1], rtol=1e-12)
