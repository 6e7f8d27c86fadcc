"""Compare the numba and pure-numpy variants of every hot kernel.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1]
    python benchmarks/bench_kernels.py --pipeline

The kernel table calls ``<name>_loops`` and ``<name>_numpy`` directly, so
it needs numba installed to show compiled timings; without numba the loops
variant runs as plain Python.  ``--pipeline`` times a full kernel solve and
a transport simulation in two subprocesses, one with
``ISSLAB_DISABLE_NUMBA=1``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from isslab import kernels
from isslab._accel import USE_NUMBA


def _cases(scale, rng):
    n = 2000 * scale
    lower, upper = rng.normal(size=n), rng.normal(size=n)
    diag = 4.0 + np.abs(rng.normal(size=n))
    rhs = rng.normal(size=n)

    N = 64 * scale
    P = 2 * N + 1
    G = np.tril(rng.normal(size=(P, P)))
    G0 = np.tril(rng.normal(size=(P, P)))
    lam = rng.normal(size=P)

    m = 129 * scale
    K = np.tril(rng.normal(size=(m, m)))
    L = np.tril(rng.normal(size=(m, m)))
    table = kernels.segment_weight_table(m, 1.0 / (m - 1))

    profile = np.cumsum(rng.normal(size=20001 * scale)) * 1e-2
    levels = np.linspace(-2.0, 2.0, 64)
    g = rng.normal(size=20000 * scale)
    return {
        "tridiag_solve": (lower, diag, upper, rhs),
        "cumulative_integral": (g, 1e-3),
        "kernel_sweep": (G, G0, lam, 1.0 / N),
        "inverse_sweep": (L, K, table),
        "level_measures": (profile, levels, 1.0 / (profile.size - 1)),
    }


def _time(fn, args, repeat):
    fn(*args)  # warm-up (triggers compilation)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def bench_kernels(repeat, scale):
    rng = np.random.default_rng(0)
    print(f"numba available: {USE_NUMBA}")
    print(f"{'kernel':<22}{'loops [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, args in _cases(scale, rng).items():
        loops = getattr(kernels, f"{name}_loops")
        vec = getattr(kernels, f"{name}_numpy")
        t_loops, t_vec = _time(loops, args, repeat), _time(vec, args, repeat)
        print(f"{name:<22}{1e3 * t_loops:>12.3f}{1e3 * t_vec:>12.3f}{t_vec / t_loops:>10.2f}")


PIPELINE = """
import time
from isslab import Scenario, Profile, BoundarySignal, simulate, solve_kernel, backend_name
solve_kernel(a=-10.0, mu=1.0, target_n=3.0, n_cells=32)
t0 = time.perf_counter()
solve_kernel(a=-10.0, mu=1.0, target_n=3.0, n_cells=256)
t1 = time.perf_counter()
simulate(Scenario(m=1.0, u0=Profile.sine_mode(1.0), d=BoundarySignal.sinusoid(0.2, 2.0),
                  n_cells=400, dt=1e-3, t_final=2.0))
t2 = time.perf_counter()
print(f"{backend_name():<8}kernel(256) {1e3 * (t1 - t0):9.1f} ms   transport(400 cells, 2000 steps) {1e3 * (t2 - t1):9.1f} ms")
"""


def bench_pipeline():
    sys.stdout.flush()
    for disable in ("0", "1"):
        env = dict(os.environ, ISSLAB_DISABLE_NUMBA=disable)
        subprocess.run([sys.executable, "-c", PIPELINE], env=env, check=True)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--scale", type=int, default=1, help="multiply every problem size")
    parser.add_argument("--pipeline", action="store_true", help="also time end-to-end runs per backend")
    args = parser.parse_args(argv)
    bench_kernels(args.repeat, args.scale)
    if args.pipeline:
        bench_pipeline()


if __name__ == "__main__":
    main()
