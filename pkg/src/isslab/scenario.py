"""Scenario: plant choice, coefficients, signals, discretization and checks."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

from .errors import ConfigError
from .signals import BoundarySignal, FieldSignal, Profile, eval_boundary

PLANTS = ("transport", "burgers", "reaction", "closed_loop")

THEOREMS = (
    "T6i", "T6ii", "T7", "T7x", "T8", "T9",
    "T11i", "T11ii", "T12", "T13", "T15", "T16",
    "CL",
)

DEFAULT_THEOREMS = {
    "transport": ("T6i", "T6ii"),
    "burgers": ("T11i",),
    "reaction": (),
    "closed_loop": ("CL",),
}

COMPAT_TOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    plant: str = "transport"
    mu: float = 1.0
    m: float = 0.0
    n: float = 0.0
    nu: float = 1.0
    a: Profile = Profile.constant(0.0)
    target_n: float = 0.0
    u0: Profile = Profile()
    d: BoundarySignal = BoundarySignal()
    f: FieldSignal = FieldSignal()
    n_cells: int = 200
    dt: float = 1e-3
    t_final: float = 5.0
    snapshot_stride: int = 10
    theorems: Optional[Tuple[str, ...]] = None
    p: float = 4.0
    epsilon: Optional[float] = None
    tolerance: float = 0.02
    # multiplies every envelope before comparison; values below 1 exercise
    # the failure path of the verdict machinery
    envelope_scale: float = 1.0
    kernel_cells: Optional[int] = None
    name: str = "scenario"
    # role tags set by the splitting machinery ("full", "w" or "v")
    role: str = "full"
    placement: Optional[str] = None
    # closed loop only: add c*x to u0 so that u0(1) matches the feedback at t = 0
    compatible_u0: bool = False

    @property
    def requested_theorems(self) -> Tuple[str, ...]:
        if self.theorems is None:
            return DEFAULT_THEOREMS[self.plant]
        return tuple(self.theorems)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def problems(self) -> list:
        """Every violated invariant, as human-readable messages."""
        out = []
        if self.plant not in PLANTS:
            out.append(f"plant must be one of {', '.join(PLANTS)}, got {self.plant!r}")
        if not self.mu > 0:
            out.append("mu must be positive")
        if self.plant == "burgers" and not self.nu > 0:
            out.append("nu must be positive for the Burgers plant")
        if self.plant == "closed_loop" and self.target_n < 0:
            out.append("target_n must be nonnegative")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            out.append("n_cells must be an integer >= 2")
        if not self.dt > 0:
            out.append("dt must be positive")
        if not self.t_final > 0:
            out.append("t_final must be positive")
        elif self.dt > 0 and abs(self.n_steps * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            out.append("t_final must be an integer multiple of dt")
        if self.snapshot_stride < 1:
            out.append("snapshot_stride must be >= 1")
        if not self.p > 2:
            out.append("p must be greater than 2")
        if self.epsilon is not None and not self.epsilon > 0:
            out.append("epsilon must be positive")
        if self.tolerance < 0:
            out.append("tolerance must be nonnegative")
        if not self.envelope_scale > 0:
            out.append("envelope_scale must be positive")
        for th in self.requested_theorems:
            if th not in THEOREMS:
                out.append(f"unknown theorem {th!r}")
        try:
            u0_left = float(self.u0(0.0))
            u0_right = float(self.u0(1.0))
            d0 = eval_boundary(self.d, 0.0)
        except Exception as exc:  # noqa: BLE001 - surfaced as a validation message
            out.append(f"signals could not be evaluated: {exc}")
        else:
            if abs(u0_left) > COMPAT_TOL:
                out.append(f"compatibility: u0(0) = {u0_left:.3g} but the left boundary value is 0")
            if self.plant != "closed_loop" and abs(u0_right - d0) > COMPAT_TOL:
                out.append(
                    f"compatibility: u0(1) = {u0_right:.6g} differs from d(0) = {d0:.6g}; "
                    "well-posedness requires d(0) = u0(1)"
                )
        return out

    def validate(self) -> "Scenario":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self


def zero_scenario(plant="transport", **kw) -> Scenario:
    return Scenario(plant=plant, **kw)
