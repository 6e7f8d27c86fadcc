"""Closed-form backstepping kernel for a constant reaction mismatch.

For constant lam = (n - a) / mu the kernel PDE k_xx - k_yy = lam k with
k(x, 0) = 0 and k(x, x) = -lam x / 2 is solved by

    k(x, y) = -lam y I_1(z) / z,   z = sqrt(lam (x^2 - y^2)).

The ratio I_1(z)/z = (1/2) sum_j w^j / (j! (j+1)!), w = z^2 / 4, is an entire
function of w, so the series below covers lam of either sign without
complex arithmetic.
"""
import numpy as np

_MAX_TERMS = 200


def i1_over_z(w):
    """I_1(z) / z as a function of w = z^2 / 4 (any real w)."""
    w = np.asarray(w, dtype=float)
    term = np.full(w.shape, 0.5)
    total = term.copy()
    for j in range(1, _MAX_TERMS):
        term = term * w / (j * (j + 1))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def bessel_i1(z):
    """Modified Bessel function I_1 from its power series."""
    z = np.asarray(z, dtype=float)
    return z * i1_over_z(z * z / 4.0)


def bessel_kernel(x, y, lam):
    """k(x, y) = -lam y I_1(z)/z for the constant-coefficient kernel PDE."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -lam * y * i1_over_z(lam * (x * x - y * y) / 4.0)


def bessel_kernel_grid(n_cells, lam):
    """Lower-triangular (n_cells+1)^2 array of k(x_i, y_j), zero above the diagonal."""
    nodes = np.arange(n_cells + 1) / n_cells
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    return np.where(Y <= X, bessel_kernel(X, Y, lam), 0.0)
