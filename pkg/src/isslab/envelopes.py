"""Closed-form ISS envelopes and the verdict engine.

Every ``envelope_*`` function accepts scalars or arrays: ``t`` and the
fields of ``stats`` (``sup_d``, ``sup_f``, ``int_f_l2sq``) broadcast
together, so a whole trajectory is evaluated in one call.

Labels are short identifiers for the individual bounds:

=====  =====================================  ==========================
label  bound                                  observed quantity
=====  =====================================  ==========================
T6i    transport, max|u|, sup-type forcing    max_x |u(x, t)|
T6ii   transport, max|u|, integral forcing    max_x |u(x, t)|
T7     homogeneous transport, ||w||^2         ||w(t)||^2
T7x    homogeneous transport, ||w_x||^2       ||w_x(t)||^2
T8     homogeneous transport, max|w|          max_x |w(x, t)|
T9     boundary-driven transport, max|v|      max over [0,1]x[0,t]
T11i   Burgers, ||u||^2, integral forcing     ||u(t)||^2
T11ii  Burgers, ||u||^2, sup-type forcing     ||u(t)||^2
T12    Burgers boundary subsystem, max|w|     max over [0,1]x[0,t]
T13    Burgers perturbation, ||v||^2          ||v(t)||^2
T15    forced Burgers boundary subsystem      max over [0,1]x[0,t]
T16    unforced Burgers perturbation          ||v(t)||^2
=====  =====================================  ==========================
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import ParameterError
from .grid import NormTriple

DEFAULT_REL_TOL = 0.02
DEFAULT_ABS_TOL = 1e-6


def degiorgi_factor(p: float) -> float:
    """2^{(5p-8)/(2p-4)}, the level-set constant; decreases to 2^{5/2} as p grows."""
    if not p > 2:
        raise ParameterError(f"p must exceed 2, got {p}")
    if np.isinf(p):
        return 2.0**2.5
    return 2.0 ** ((5.0 * p - 8.0) / (2.0 * p - 4.0))


@dataclass(frozen=True)
class EnvelopeParams:
    mu: float = 1.0
    m: float = 0.0
    n: float = 0.0
    nu: float = 1.0
    p: float = 4.0
    epsilon: Optional[float] = None
    u0_norms: Optional[NormTriple] = None

    def __post_init__(self):
        if not self.mu > 0:
            raise ParameterError("mu must be positive")
        if not self.p > 2:
            raise ParameterError(f"p must exceed 2, got {self.p}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")

    @property
    def n_tilde(self) -> float:
        return self.m**2 / (4.0 * self.mu) + self.n

    @property
    def stable(self) -> bool:
        return self.n_tilde >= 0.0

    @property
    def gain(self) -> float:
        """e^{|m|/mu}, the price of undoing the exponential transform."""
        return float(np.exp(abs(self.m) / self.mu))

    @property
    def transport_rate(self) -> float:
        return self.n_tilde + 2.0 * self.mu

    @property
    def eps_upper_T6ii(self) -> float:
        return self.m**2 / (2.0 * self.mu) + 2.0 * self.n + 4.0 * self.mu

    def eps_T6ii(self) -> float:
        eps = self.epsilon if self.epsilon is not None else 0.5 * self.eps_upper_T6ii
        if not 0.0 < eps < self.eps_upper_T6ii:
            raise ParameterError(f"epsilon must lie in (0, {self.eps_upper_T6ii:.6g}), got {eps}")
        return eps

    def eps_burgers(self) -> float:
        eps = self.epsilon if self.epsilon is not None else 0.5 * self.mu
        if not 0.0 < eps < self.mu:
            raise ParameterError(f"epsilon must lie in (0, mu) = (0, {self.mu:.6g}), got {eps}")
        return eps

    def with_u0(self, u0_norms: NormTriple) -> "EnvelopeParams":
        return replace(self, u0_norms=u0_norms)

    def _u0(self) -> NormTriple:
        if self.u0_norms is None:
            raise ParameterError("u0_norms must be set to evaluate this envelope")
        return self.u0_norms


def _u0_grad_sq(nt: NormTriple) -> float:
    return max(nt.h1**2 - nt.l2**2, 0.0)


def envelope_T8(params: EnvelopeParams, t):
    """max|w| <= e^{|m|/mu} sqrt(2 + m^2/(2 mu^2)) ||u0||_H1 e^{-(n~ + 2 mu) t}."""
    mu, m = params.mu, params.m
    pref = params.gain * np.sqrt(2.0 + m * m / (2.0 * mu * mu))
    return pref * params._u0().h1 * np.exp(-params.transport_rate * np.asarray(t, float))


def envelope_T9(params: EnvelopeParams, stats, t=None):
    """max over [0,1]x[0,t] of |v| <= e^{|m|/mu} (sup|d| + factor(p)/mu sup|f|)."""
    return params.gain * (np.asarray(stats.sup_d, float)
                          + degiorgi_factor(params.p) / params.mu * np.asarray(stats.sup_f, float))


def envelope_T6i(params: EnvelopeParams, stats, t):
    return envelope_T8(params, t) + envelope_T9(params, stats, t)


def envelope_T6ii(params: EnvelopeParams, stats, t):
    eps = params.eps_T6ii()
    mu, m = params.mu, params.m
    pref = params.gain * np.sqrt(2.0 + m * m / (2.0 * mu * mu))
    decay = np.exp(-(params.transport_rate - 0.5 * eps) * np.asarray(t, float))
    return (pref * params._u0().h1 * decay
            + params.gain * np.asarray(stats.sup_d, float)
            + params.gain * np.sqrt(3.0 / eps * np.asarray(stats.int_f_l2sq, float)))


def envelope_T7(params: EnvelopeParams, t):
    """(L2 bound, gradient bound) of the homogeneous transport subsystem."""
    mu, m = params.mu, params.m
    nt = params._u0()
    decay = np.exp(-2.0 * params.transport_rate * np.asarray(t, float))
    l2_sq = params.gain * nt.l2**2 * decay
    h1x_sq = params.gain**2 * (1.5 * m * m / (mu * mu) * nt.l2**2 + 4.0 * _u0_grad_sq(nt)) * decay
    return np.sqrt(l2_sq), np.sqrt(h1x_sq)


def envelope_T11i(params: EnvelopeParams, stats, t):
    """||u||^2 <= 2||u0||^2 e^{-(mu-eps)t} + 2 sup|d|^2 + (2/eps) int ||f||^2."""
    eps = params.eps_burgers()
    nt = params._u0()
    return (2.0 * nt.l2**2 * np.exp(-(params.mu - eps) * np.asarray(t, float))
            + 2.0 * np.asarray(stats.sup_d, float) ** 2
            + 2.0 / eps * np.asarray(stats.int_f_l2sq, float))


def envelope_T11ii(params: EnvelopeParams, stats, t):
    mu = params.mu
    nt = params._u0()
    return (2.0 * np.exp(-mu * np.asarray(t, float)) * nt.l2**2
            + 4.0 * np.asarray(stats.sup_d, float) ** 2
            + 4.0 * degiorgi_factor(params.p) / mu**2 * np.asarray(stats.sup_f, float) ** 2)


def envelopes_T12_to_T16(params: EnvelopeParams, stats, t):
    """Subsystem bounds of the Burgers splittings, keyed by label.

    T12 and T15 bound max|w| over [0,1]x[0,t]; T13 and T16 bound ||v(t)||^2.
    T13 and T16 need ``u0_norms``; they are omitted when it is unset.
    """
    t = np.asarray(t, float)
    sup_d = np.asarray(stats.sup_d, float)
    out = {
        "T12": sup_d + 0.0 * t,
        "T15": sup_d + degiorgi_factor(params.p) / params.mu * np.asarray(stats.sup_f, float) + 0.0 * t,
    }
    if params.u0_norms is not None:
        eps = params.eps_burgers()
        l2sq = params.u0_norms.l2**2
        out["T13"] = l2sq * np.exp(-(params.mu - eps) * t) + np.asarray(stats.int_f_l2sq, float) / eps
        out["T16"] = l2sq * np.exp(-params.mu * t) + 0.0 * sup_d
    return out


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass
class EnvelopeVerdict:
    theorem_id: str
    times: np.ndarray
    envelope_values: np.ndarray
    observed_values: np.ndarray
    max_violation: float
    passed: bool
    hypothesis_met: bool = True
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    notes: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if not self.hypothesis_met:
            return "hypothesis-not-met"
        return "pass" if self.passed else "fail"

    @property
    def ok(self) -> bool:
        """True unless a claimed envelope is violated."""
        return self.passed or not self.hypothesis_met

    @property
    def max_ratio(self) -> float:
        env = np.maximum(self.envelope_values, 1e-300)
        return float(np.max(self.observed_values / env)) if self.observed_values.size else 0.0

    def summary(self) -> dict:
        return {
            "theorem": self.theorem_id,
            "status": self.status,
            "hypothesis_met": self.hypothesis_met,
            "max_violation": self.max_violation,
            "max_ratio": self.max_ratio,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "notes": list(self.notes),
        }


def make_verdict(theorem_id, times, envelope, observed, rel_tol=DEFAULT_REL_TOL,
                 abs_tol=DEFAULT_ABS_TOL, hypothesis_met=True, notes=()):
    times = np.asarray(times, float)
    envelope = np.broadcast_to(np.asarray(envelope, float), times.shape).copy()
    observed = np.asarray(observed, float)
    excess = observed - envelope
    allowed = rel_tol * np.abs(envelope) + abs_tol
    return EnvelopeVerdict(
        theorem_id=theorem_id,
        times=times,
        envelope_values=envelope,
        observed_values=observed,
        max_violation=float(np.max(excess)) if excess.size else 0.0,
        passed=bool(np.all(excess <= allowed)),
        hypothesis_met=bool(hypothesis_met),
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        notes=list(notes),
    )


TRANSPORT_THEOREMS = ("T6i", "T6ii", "T7", "T7x", "T8", "T9")
BURGERS_THEOREMS = ("T11i", "T11ii", "T12", "T13", "T15", "T16")


def params_from_scenario(scenario, **overrides) -> EnvelopeParams:
    kw = dict(mu=scenario.mu, m=scenario.m, n=scenario.n, nu=scenario.nu,
              p=scenario.p, epsilon=scenario.epsilon)
    kw.update(overrides)
    return EnvelopeParams(**kw)


def _is_zero(arr):
    return bool(np.all(np.asarray(arr) == 0.0))


def _check_role(trajectory, which):
    """Raise unless the trajectory is the kind of system the bound is about."""
    plant = trajectory.plant
    if which in TRANSPORT_THEOREMS and plant != "transport":
        raise ParameterError(f"{which} applies to the transport plant, got {plant!r}")
    if which in BURGERS_THEOREMS and plant != "burgers":
        raise ParameterError(f"{which} applies to the Burgers plant, got {plant!r}")
    undisturbed = _is_zero(trajectory.sup_d[-1]) and _is_zero(trajectory.sup_f[-1])
    zero_start = _is_zero(trajectory.snapshots[0])
    if which in ("T7", "T7x", "T8") and not undisturbed:
        raise ParameterError(f"{which} needs a trajectory without boundary or in-domain disturbance")
    if which == "T9" and not zero_start:
        raise ParameterError("T9 needs a trajectory with zero initial data")
    if which in ("T12", "T15"):
        if trajectory.role != "w" or not zero_start:
            raise ParameterError(f"{which} applies to the boundary-driven Burgers subsystem w")
        if which == "T12" and not _is_zero(trajectory.sup_f[-1]):
            raise ParameterError("T12 needs the unforced boundary subsystem (placement 'v')")
    if which in ("T13", "T16"):
        if trajectory.role not in ("v", "full") or not _is_zero(trajectory.sup_d[-1]):
            raise ParameterError(f"{which} applies to the Burgers perturbation subsystem v")
        if which == "T16" and not _is_zero(trajectory.sup_f[-1]):
            raise ParameterError("T16 needs the unforced perturbation subsystem (placement 'w')")
    if which in ("T6i", "T6ii", "T11i", "T11ii") and trajectory.role != "full":
        raise ParameterError(f"{which} applies to the original (unsplit) system")


def verify(trajectory, which: str, params: EnvelopeParams, rel_tol: float = DEFAULT_REL_TOL,
           abs_tol: float = DEFAULT_ABS_TOL, hypothesis_stats=None) -> EnvelopeVerdict:
    """Compare one envelope against the trajectory at every recorded time.

    ``hypothesis_stats`` supplies the disturbance sizes used in smallness
    hypotheses of the Burgers subsystems (the original scenario's, since a
    split subsystem only sees part of the data); it defaults to the
    trajectory's own final statistics.
    """
    from .grid import norms

    _check_role(trajectory, which)
    if params.u0_norms is None:
        params = params.with_u0(norms(trajectory.initial))
    t = trajectory.times
    stats = trajectory
    notes = []
    hyp = True
    final = hypothesis_stats or DisturbanceSize.of(trajectory)
    ratio = params.mu / params.nu if params.nu > 0 else np.inf
    combined = final.sup_d + degiorgi_factor(params.p) / params.mu * final.sup_f

    if which in TRANSPORT_THEOREMS:
        if not params.stable:
            hyp = False
            notes.append(f"m^2/(4 mu) + n = {params.n_tilde:.4g} < 0")
        else:
            notes.append(f"m^2/(4 mu) + n = {params.n_tilde:.4g} >= 0: satisfied")
    if which in ("T11i", "T13"):
        if not params.nu > 0:
            hyp = False
            notes.append("nu must be positive")
        elif final.sup_d < ratio:
            notes.append(f"max|d| = {final.sup_d:.4g} < mu/nu = {ratio:.4g}: satisfied")
        else:
            hyp = False
            notes.append(f"max|d| = {final.sup_d:.4g} >= mu/nu = {ratio:.4g}: hypothesis not met")
    if which in ("T11ii", "T16"):
        if combined < ratio:
            notes.append(f"max|d| + factor/mu max|f| = {combined:.4g} < mu/nu = {ratio:.4g}: satisfied")
        else:
            hyp = False
            notes.append(f"max|d| + factor/mu max|f| = {combined:.4g} >= mu/nu = {ratio:.4g}: hypothesis not met")

    if which == "T6i":
        env, obs = envelope_T6i(params, stats, t), trajectory.linf
    elif which == "T6ii":
        env, obs = envelope_T6ii(params, stats, t), trajectory.linf
    elif which == "T7":
        env, obs = envelope_T7(params, t)[0] ** 2, trajectory.l2**2
    elif which == "T7x":
        env, obs = envelope_T7(params, t)[1] ** 2, trajectory.grad_l2sq
    elif which == "T8":
        env, obs = envelope_T8(params, t), trajectory.linf
    elif which == "T9":
        env, obs = envelope_T9(params, stats, t), trajectory.running_linf
    elif which == "T11i":
        env, obs = envelope_T11i(params, stats, t), trajectory.l2**2
    elif which == "T11ii":
        env, obs = envelope_T11ii(params, stats, t), trajectory.l2**2
    elif which in ("T12", "T13", "T15", "T16"):
        env = envelopes_T12_to_T16(params, stats, t)[which]
        obs = trajectory.running_linf if which in ("T12", "T15") else trajectory.l2**2
    else:
        raise ParameterError(f"unknown theorem {which!r}")
    return make_verdict(which, t, env, obs, rel_tol, abs_tol, hyp, notes)


class DisturbanceSize(NamedTuple):
    """Whole-run disturbance sizes used by the smallness hypotheses."""

    sup_d: float
    sup_f: float

    @classmethod
    def of(cls, trajectory):
        return cls(float(trajectory.sup_d[-1]), float(trajectory.sup_f[-1]))
