"""Level-set machinery for maximum bounds of boundary-driven trajectories.

For a trajectory v and a level k the scan records

* ``phi[k]``: the largest measure, over recorded times, of {x : v(x, s) > k};
* ``Ik_max[k]``: the largest value of the energy I_k(s) = int (v - k)_+^2 dx.

The iteration lemma states that a nonincreasing phi with
phi(h) <= (M / (h - k))^alpha * phi(k)^beta for all h > k >= k0 vanishes at
k0 + d, d = 2^{beta/(beta-1)} M phi(k0)^{(beta-1)/alpha}.  On a grid,
"vanishes" is read as "at most one cell".

Measures are taken from the piecewise-linear interpolant of the nodal values,
so a set boundary falling inside a cell contributes the exact fraction of
that cell instead of a fixed half cell.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .envelopes import degiorgi_factor
from .errors import DimensionError, ParameterError
from .grid import GridFunction
from .splitting import removal_rate

HYPOTHESIS_SLACK = 0.05
N_LEVELS = 64
_MONOTONE_TOL = 1e-12


def truncate_plus(f: GridFunction, k: float) -> GridFunction:
    """Pointwise (f - k)_+."""
    return f.with_values(np.maximum(f.values - k, 0.0))


@dataclass(frozen=True)
class LevelSetScan:
    """Per-level measure and energy maxima of a family of snapshots.

    ``cell`` is the grid spacing; it is the resolution floor for measures.
    """

    levels: np.ndarray
    phi: np.ndarray
    Ik_max: np.ndarray
    cell: float

    def __post_init__(self):
        levels = np.asarray(self.levels, float)
        if levels.ndim != 1 or levels.size == 0:
            raise DimensionError("levels must be a nonempty vector")
        if np.any(np.diff(levels) <= 0):
            raise ParameterError("levels must be strictly increasing")
        for name in ("phi", "Ik_max"):
            arr = np.asarray(getattr(self, name), float)
            if arr.shape != levels.shape:
                raise DimensionError(f"{name} must have one entry per level")
            if np.any(np.diff(arr) > _MONOTONE_TOL * max(1.0, float(np.max(np.abs(arr))))):
                raise ParameterError(f"{name} must be nonincreasing in k")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "levels", levels)

    def phi_at(self, k: float) -> float:
        """phi at the sampled level nearest to ``k``."""
        return float(self.phi[int(np.argmin(np.abs(self.levels - k)))])

    def nearest_level(self, k: float) -> float:
        return float(self.levels[int(np.argmin(np.abs(self.levels - k)))])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["level", "phi", "Ik_max"])
            for row in zip(self.levels, self.phi, self.Ik_max):
                writer.writerow([repr(float(v)) for v in row])


def _snapshot_block(source):
    """(snapshots, nodes, cell) from a trajectory or an explicit array."""
    snaps = getattr(source, "snapshots", None)
    if snaps is not None:
        grid = source.grid
        return np.asarray(snaps, float), grid.nodes, grid.h
    arr = np.atleast_2d(np.asarray(source, float))
    n = arr.shape[1] - 1
    if n < 1:
        raise DimensionError("snapshots need at least 2 nodes")
    return arr, np.arange(n + 1) / n, 1.0 / n


def scan_levels(source, levels, rate: float = 0.0, sign: float = 1.0) -> LevelSetScan:
    """Scan ``sign * exp(rate x) * v`` over every recorded snapshot.

    ``source`` is a trajectory record or an (n_snapshots, n_nodes) array.
    ``rate`` = -m / (2 mu) applies the advection-removing transform; ``sign``
    = -1 scans the mirrored trajectory, which yields the lower bound.
    """
    snaps, nodes, cell = _snapshot_block(source)
    if snaps.shape[0] == 0 or snaps.size == 0:
        raise DimensionError("trajectory has no snapshots to scan")
    levels = np.asarray(levels, float)
    weight = sign * np.exp(rate * nodes)
    phi = np.zeros(levels.size)
    energy = np.zeros(levels.size)
    for row in snaps:
        m, e = kernels.level_measures(weight * row, levels, cell)
        np.maximum(phi, m, out=phi)
        np.maximum(energy, e, out=energy)
    # summed cell lengths can overshoot the unit domain by rounding
    np.minimum(phi, 1.0, out=phi)
    return LevelSetScan(levels, phi, energy, cell)


@dataclass(frozen=True)
class IterationWitness:
    """Constants of the iteration lemma for one trajectory."""

    k0: float
    alpha: float
    beta: float
    M: float
    phi_k0: float = 1.0

    def __post_init__(self):
        if not self.beta > 1:
            raise ParameterError("beta must exceed 1 (equivalently p > 2)")
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if self.M < 0 or self.phi_k0 < 0:
            raise ParameterError("M and phi(k0) must be nonnegative")

    @property
    def d_jump(self) -> float:
        b = self.beta
        return 2.0 ** (b / (b - 1.0)) * self.M * self.phi_k0 ** ((b - 1.0) / self.alpha)

    @classmethod
    def for_p(cls, k0: float, sup_f_tilde: float, mu: float, p: float = 4.0, phi_k0: float = 1.0):
        """Constants used for the parabolic problem: alpha = 2, beta = 3 - 4/p, M = 2 sup|f~| / mu."""
        if not p > 2:
            raise ParameterError(f"p must exceed 2, got {p}")
        beta = 3.0 if np.isinf(p) else 3.0 - 4.0 / p
        return cls(k0=max(float(k0), 0.0), alpha=2.0, beta=beta, M=2.0 * sup_f_tilde / mu, phi_k0=phi_k0)

    @classmethod
    def from_trajectory(cls, trajectory, p: float = 4.0, sign: float = 1.0,
                        sup_f_tilde: Optional[float] = None, phi_k0: float = 1.0):
        """Witness for the transformed trajectory ``sign * exp(-m x / 2 mu) v``.

        k0 = max(sup_t sign * d~(t), 0) with d~ = exp(-m / 2 mu) d.  When
        ``sup_f_tilde`` is not given it is computed from the scenario's
        forcing at every time step.
        """
        scenario = trajectory.scenario
        if scenario is None:
            raise ParameterError("trajectory carries no scenario; pass the constants explicitly")
        rate = transform_rate(scenario)
        d_tilde = np.exp(rate) * sign * np.asarray(trajectory.d_values, float)
        if sup_f_tilde is None:
            sup_f_tilde = sup_transformed_forcing(scenario, trajectory.grid.nodes, trajectory.times, rate)
        return cls.for_p(float(np.max(d_tilde)), sup_f_tilde, scenario.mu, p, phi_k0)


def transform_rate(scenario) -> float:
    """-m / (2 mu) for the transport plant (advection removal); Burgers needs no transform."""
    return removal_rate(scenario.m, scenario.mu) if scenario.plant == "transport" else 0.0


def sup_transformed_forcing(scenario, nodes, times, rate: float) -> float:
    if scenario.f.is_zero:
        return 0.0
    weight = np.exp(rate * nodes)
    return float(max(np.max(np.abs(weight * scenario.f(nodes, t))) for t in times))


def default_levels(k0: float, d_jump: float, n_levels: int = N_LEVELS) -> np.ndarray:
    """Levels in [k0, k0 + 1.5 d], clustered geometrically around k0 + d.

    Both k0 and k0 + d are sampled exactly.
    """
    if n_levels < 8:
        raise ParameterError("use at least 8 levels")
    scale = d_jump if d_jump > 0 else 1e-3 * max(abs(k0), 1.0)
    target = k0 + (d_jump if d_jump > 0 else 0.0)
    n_below = (5 * n_levels) // 8
    n_above = n_levels - n_below - 1
    below = target - scale * np.geomspace(1.0, 1e-3, n_below)
    above = target + scale * np.geomspace(1e-3, 0.5, n_above)
    levels = np.concatenate([below, [target], above])
    if d_jump <= 0:
        levels = levels - levels[0] + k0
    return levels


@dataclass
class IterationLemmaReport:
    hypothesis_holds: bool
    worst_ratio: float
    worst_pair: tuple
    conclusion_level: float
    phi_at_conclusion: float
    conclusion_holds: bool
    cell: float
    d_jump: float

    @property
    def passed(self) -> bool:
        return self.conclusion_holds

    def summary(self) -> dict:
        return {
            "hypothesis_holds": self.hypothesis_holds,
            "worst_ratio": self.worst_ratio,
            "worst_pair": list(self.worst_pair),
            "conclusion_level": self.conclusion_level,
            "phi_at_conclusion": self.phi_at_conclusion,
            "conclusion_holds": self.conclusion_holds,
            "cell": self.cell,
            "d_jump": self.d_jump,
        }


def _pairs_above(scan: LevelSetScan, k0: float):
    mask = scan.levels >= k0 - 1e-14 * max(1.0, abs(k0))
    lev, phi = scan.levels[mask], scan.phi[mask]
    i, j = np.triu_indices(lev.size, k=1)  # k = lev[i] < h = lev[j]
    return lev, phi, i, j


def check_iteration_lemma(scan: LevelSetScan, witness: IterationWitness,
                          slack: float = HYPOTHESIS_SLACK, min_levels: int = 8) -> IterationLemmaReport:
    """Check the lemma's hypothesis on sampled level pairs and its conclusion.

    The hypothesis phi(h) <= (M/(h-k))^alpha phi(k)^beta is tested with
    ``slack`` multiplicative slack; a phi(h) at or below one cell counts as
    satisfied since it is below the measure resolution.
    """
    d = witness.d_jump
    target = witness.k0 + d
    tol = 1e-12 * max(1.0, abs(target))
    in_range = (scan.levels >= witness.k0 - tol) & (scan.levels <= target + tol)
    needed = min_levels if d > 0 else 1
    if scan.levels[0] > witness.k0 + tol or scan.levels[-1] < target - tol or in_range.sum() < needed:
        raise ParameterError(
            f"levels do not resolve [k0, k0 + d] = [{witness.k0:.6g}, {target:.6g}]; "
            "use finer levels, e.g. default_levels(k0, d_jump)"
        )
    lev, phi, i, j = _pairs_above(scan, witness.k0)
    gap = lev[j] - lev[i]
    rhs = (witness.M / gap) ** witness.alpha * phi[i] ** witness.beta
    lhs = phi[j]
    relevant = lhs > scan.cell
    ratio = np.where(relevant, lhs / np.maximum(rhs * (1.0 + slack), 1e-300), 0.0)
    if ratio.size:
        worst = int(np.argmax(ratio))
        worst_ratio, worst_pair = float(ratio[worst]), (float(lev[i[worst]]), float(lev[j[worst]]))
    else:
        worst_ratio, worst_pair = 0.0, ()
    level = scan.nearest_level(target)
    phi_c = scan.phi_at(target)
    return IterationLemmaReport(
        hypothesis_holds=bool(worst_ratio <= 1.0),
        worst_ratio=worst_ratio,
        worst_pair=worst_pair,
        conclusion_level=level,
        phi_at_conclusion=phi_c,
        conclusion_holds=bool(phi_c <= scan.cell),
        cell=scan.cell,
        d_jump=d,
    )


def linf_bound_from_scan(scan: LevelSetScan, witness: IterationWitness) -> float:
    """The certified level k0 + d.  ``scan`` is accepted for symmetry with the checker."""
    return witness.k0 + witness.d_jump


def fit_constant_M(scan: LevelSetScan, k0: float, alpha: float, beta: float) -> float:
    """Smallest M for which the sampled pairs satisfy the lemma's hypothesis."""
    lev, phi, i, j = _pairs_above(scan, k0)
    live = phi[j] > 0
    if not np.any(live):
        return 0.0
    i, j = i[live], j[live]
    needed = (lev[j] - lev[i]) * (phi[j] / phi[i] ** beta) ** (1.0 / alpha)
    return float(np.max(needed))


def chebyshev_link(scan: LevelSetScan) -> float:
    """Largest excess of phi(h) over Ik_max(k)/(h - k)^2 + cell across level pairs.

    Nonpositive when the discrete measures respect the Chebyshev bound.
    """
    i, j = np.triu_indices(scan.levels.size, k=1)
    gap = scan.levels[j] - scan.levels[i]
    excess = scan.phi[j] - (scan.Ik_max[i] / gap**2 + scan.cell)
    return float(np.max(excess)) if excess.size else -scan.cell


@dataclass
class LevelSetCertificate:
    """Both-sided level-set analysis of one boundary-driven trajectory."""

    upper: IterationLemmaReport
    lower: IterationLemmaReport
    upper_bound: float
    lower_bound: float
    observed_max: float
    observed_min: float
    scan_upper: LevelSetScan
    scan_lower: LevelSetScan

    @property
    def passed(self) -> bool:
        return self.upper.passed and self.lower.passed


def certify_trajectory(trajectory, p: float = 4.0, n_levels: int = N_LEVELS) -> LevelSetCertificate:
    """Run the level-set argument on ``v~`` and on ``-v~``.

    The observed extremes are those of the transformed trajectory, so they
    compare directly with the certified levels.
    """
    scenario = trajectory.scenario
    if scenario is None:
        raise ParameterError("trajectory carries no scenario")
    rate = transform_rate(scenario)
    sup_ft = sup_transformed_forcing(scenario, trajectory.grid.nodes, trajectory.times, rate)
    reports, scans, bounds = [], [], []
    for sign in (1.0, -1.0):
        wit = IterationWitness.from_trajectory(trajectory, p, sign=sign, sup_f_tilde=sup_ft)
        scan = scan_levels(trajectory, default_levels(wit.k0, wit.d_jump, n_levels), rate, sign)
        reports.append(check_iteration_lemma(scan, wit))
        scans.append(scan)
        bounds.append(linf_bound_from_scan(scan, wit))
    vt = np.exp(rate * trajectory.grid.nodes) * trajectory.snapshots
    return LevelSetCertificate(
        upper=reports[0], lower=reports[1],
        upper_bound=bounds[0], lower_bound=-bounds[1],
        observed_max=float(np.max(vt)), observed_min=float(np.min(vt)),
        scan_upper=scans[0], scan_lower=scans[1],
    )


def certified_level(k0: float, sup_f_tilde: float, mu: float, p: float = 4.0) -> float:
    """k0 + factor(p) sup|f~| / mu, the closed form of k0 + d with phi(k0) = 1."""
    return max(k0, 0.0) + degiorgi_factor(p) * sup_f_tilde / mu
