"""Hot numeric kernels with a numba path and a pure-numpy path.

Every kernel exists twice: ``<name>_loops`` is written as explicit loops and
is compiled with numba when it is available, ``<name>_numpy`` is the
vectorized fallback.  The public ``<name>`` is bound to one of them at import
time (see :mod:`isslab._accel`).  Both variants are importable so tests and
the benchmark can compare them directly.
"""
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# Tridiagonal solve
# ---------------------------------------------------------------------------


@njit
def tridiag_solve_loops(lower, diag, upper, rhs):
    """Thomas algorithm.  ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = rhs.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    denom = diag[0]
    cp[0] = upper[0] / denom
    dp[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / denom
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def tridiag_solve_numpy(lower, diag, upper, rhs):
    n = rhs.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs, check_finite=False)


# ---------------------------------------------------------------------------
# Fourth-order cumulative quadrature on a uniform line
# ---------------------------------------------------------------------------
#
# Interval [k, k+1] uses the cubic through four neighbouring samples:
#   first interval   (9, 19, -5, 1) / 24
#   interior         (-1, 13, 13, -1) / 24
#   last interval    (1, -5, 19, 9) / 24
# Lines of 2 and 3 samples fall back to trapezoid and the parabola.


@njit
def cumulative_integral_loops(g, delta):
    n = g.shape[0]
    out = np.zeros(n)
    if n == 2:
        out[1] = 0.5 * delta * (g[0] + g[1])
        return out
    if n == 3:
        out[1] = delta * (5.0 * g[0] + 8.0 * g[1] - g[2]) / 12.0
        out[2] = out[1] + delta * (-g[0] + 8.0 * g[1] + 5.0 * g[2]) / 12.0
        return out
    if n < 2:
        return out
    c = delta / 24.0
    out[1] = c * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3])
    for k in range(1, n - 2):
        out[k + 1] = out[k] + c * (-g[k - 1] + 13.0 * g[k] + 13.0 * g[k + 1] - g[k + 2])
    k = n - 2
    out[k + 1] = out[k] + c * (g[k - 2] - 5.0 * g[k - 1] + 19.0 * g[k] + 9.0 * g[k + 1])
    return out


def cumulative_integral_numpy(g, delta):
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    out = np.zeros(n)
    if n < 2:
        return out
    if n == 2:
        out[1] = 0.5 * delta * (g[0] + g[1])
        return out
    if n == 3:
        out[1] = delta * (5.0 * g[0] + 8.0 * g[1] - g[2]) / 12.0
        out[2] = out[1] + delta * (-g[0] + 8.0 * g[1] + 5.0 * g[2]) / 12.0
        return out
    pieces = np.empty(n - 1)
    pieces[0] = 9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]
    pieces[1:-1] = -g[:-3] + 13.0 * g[1:-2] + 13.0 * g[2:-1] - g[3:]
    pieces[-1] = g[-4] - 5.0 * g[-3] + 19.0 * g[-2] + 9.0 * g[-1]
    out[1:] = np.cumsum(pieces) * (delta / 24.0)
    return out


@lru_cache(maxsize=16)
def _segment_weight_table(n_points, delta):
    table = np.zeros((n_points, n_points))
    for r in range(1, min(n_points, 4)):
        basis = np.eye(r + 1)
        for c in range(r + 1):
            table[r, c] = cumulative_integral_numpy(basis[c], delta)[-1]
    if n_points > 4:
        # rows with >= 4 samples: first and last intervals use the one-sided
        # cubic, every interval in between the centred one
        rows = np.arange(4, n_points)
        first = np.array([9.0, 19.0, -5.0, 1.0])
        inner = np.array([-1.0, 13.0, 13.0, -1.0])
        last = np.array([1.0, -5.0, 19.0, 9.0])
        for r in rows:
            w = np.zeros(r + 1)
            w[:4] += first
            w[:r + 1] += np.convolve(np.ones(r - 2), inner)
            w[r - 3:] += last
            table[r, : r + 1] = w * (delta / 24.0)
    table.setflags(write=False)
    return table


def segment_weight_table(n_points, delta):
    """Lower-triangular table whose row ``r`` integrates samples ``0..r``.

    ``table[r, :r+1] @ g[:r+1]`` equals the last entry of the cumulative
    integral of a line holding exactly ``r + 1`` samples.  Tables are cached
    and returned read-only.
    """
    return _segment_weight_table(int(n_points), float(delta))


# ---------------------------------------------------------------------------
# Successive approximation of the backstepping kernel (characteristic lattice)
# ---------------------------------------------------------------------------
#
# G[p, q] holds k(x, y) at xi = p*h, eta = q*h (x = (xi+eta)/2, y = (xi-eta)/2),
# valid for 0 <= q <= p and p + q <= 2N.  ``lam[j]`` samples the reaction
# mismatch (n - a(y))/mu at y = j*h/2.  One sweep evaluates
#   G0 + 1/4 * int_eta^xi int_0^eta lam((tau - s)/2) G(tau, s) ds dtau.


@njit
def kernel_sweep_loops(G, G0, lam, h):
    P = G.shape[0]
    N2 = P - 1
    H = np.zeros((P, P))
    for p in range(P):
        top = min(p, N2 - p)
        line = np.empty(top + 1)
        for s in range(top + 1):
            line[s] = lam[p - s] * G[p, s]
        cum = cumulative_integral_loops(line, h)
        for s in range(top + 1):
            H[p, s] = cum[s]
    out = np.zeros((P, P))
    diff = 0.0
    for q in range(N2 // 2 + 1):
        length = N2 - 2 * q + 1
        line = np.empty(length)
        for r in range(length):
            line[r] = H[q + r, q]
        cum = cumulative_integral_loops(line, h)
        for r in range(length):
            p = q + r
            val = G0[p, q] + 0.25 * cum[r]
            d = abs(val - G[p, q])
            if d > diff:
                diff = d
            out[p, q] = val
    return out, diff


def kernel_sweep_numpy(G, G0, lam, h):
    P = G.shape[0]
    N2 = P - 1
    H = np.zeros((P, P))
    for p in range(P):
        top = min(p, N2 - p)
        s = np.arange(top + 1)
        H[p, : top + 1] = cumulative_integral_numpy(lam[p - s] * G[p, : top + 1], h)
    out = np.zeros((P, P))
    for q in range(N2 // 2 + 1):
        stop = N2 - q + 1
        cum = cumulative_integral_numpy(H[q:stop, q], h)
        out[q:stop, q] = G0[q:stop, q] + 0.25 * cum
    diff = float(np.max(np.abs(out - G)))
    return out, diff


# ---------------------------------------------------------------------------
# Successive approximation of the inverse kernel on the x-grid triangle
# ---------------------------------------------------------------------------
#
# l(x_i, y_j) = k(x_i, y_j) + int_{y_j}^{x_i} k(x_i, s) l(s, y_j) ds


@njit
def inverse_sweep_loops(L, K, table):
    n = K.shape[0]
    out = np.zeros((n, n))
    diff = 0.0
    for j in range(n):
        for i in range(j, n):
            acc = 0.0
            r = i - j
            for c in range(r + 1):
                acc += table[r, c] * K[i, j + c] * L[j + c, j]
            val = K[i, j] + acc
            d = abs(val - L[i, j])
            if d > diff:
                diff = d
            out[i, j] = val
    return out, diff


def inverse_sweep_numpy(L, K, table):
    n = K.shape[0]
    out = np.zeros((n, n))
    for j in range(n):
        m = n - j
        weighted = table[:m, :m] * K[j:, j:]
        out[j:, j] = K[j:, j] + weighted @ L[j:, j]
    diff = float(np.max(np.abs(out - L)))
    return out, diff


# ---------------------------------------------------------------------------
# Level-set measures of piecewise-linear data
# ---------------------------------------------------------------------------


@njit
def level_measures_loops(values, levels, h):
    """Measure of {x : interpolant(x) > k} and trapezoid of (v - k)_+^2 per level."""
    n_lev = levels.shape[0]
    n = values.shape[0]
    meas = np.zeros(n_lev)
    energy = np.zeros(n_lev)
    for li in range(n_lev):
        k = levels[li]
        m = 0.0
        e = 0.0
        for i in range(n - 1):
            a = values[i]
            b = values[i + 1]
            hi = max(a, b)
            lo = min(a, b)
            if lo > k:
                m += h
            elif hi > k:
                m += h * (hi - k) / (hi - lo)
        for i in range(n):
            t = values[i] - k
            if t > 0.0:
                w = h if 0 < i < n - 1 else 0.5 * h
                e += w * t * t
        meas[li] = m
        energy[li] = e
    return meas, energy


def level_measures_numpy(values, levels, h):
    values = np.asarray(values, dtype=float)
    k = np.asarray(levels, dtype=float)[:, None]
    a = values[None, :-1]
    b = values[None, 1:]
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    span = np.where(hi > lo, hi - lo, 1.0)
    frac = np.where(lo > k, 1.0, np.where(hi > k, (hi - k) / span, 0.0))
    meas = h * frac.sum(axis=1)
    excess = np.maximum(values[None, :] - k, 0.0) ** 2
    w = np.full(values.shape[0], h)
    w[0] = w[-1] = 0.5 * h
    energy = excess @ w
    return meas, energy


if USE_NUMBA:
    tridiag_solve = tridiag_solve_loops
    cumulative_integral = cumulative_integral_loops
    kernel_sweep = kernel_sweep_loops
    inverse_sweep = inverse_sweep_loops
    level_measures = level_measures_loops
else:
    tridiag_solve = tridiag_solve_numpy
    cumulative_integral = cumulative_integral_numpy
    kernel_sweep = kernel_sweep_numpy
    inverse_sweep = inverse_sweep_numpy
    level_measures = level_measures_numpy
