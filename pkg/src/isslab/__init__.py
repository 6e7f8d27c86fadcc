"""Numerical verification of input-to-state stability bounds for 1-D parabolic PDEs.

The package simulates boundary-disturbed transport (advection, diffusion,
reaction), viscous Burgers and backstepping closed-loop plants, splits
trajectories into boundary-driven and forcing-driven parts, and checks the
observed norms against closed-form stability envelopes.
"""
from ._accel import USE_NUMBA, backend_name
from .backstepping import (
    ClosedLoopScenario,
    VolterraKernel,
    control_law,
    control_law_shifted,
    invert_kernel,
    inverse_volterra_transform,
    run_closed_loop,
    solve_kernel,
    verify_closed_loop_iss,
    volterra_transform,
)
from .config import parse_config
from .degiorgi import (
    IterationWitness,
    LevelSetScan,
    check_iteration_lemma,
    certify_trajectory,
    scan_levels,
    truncate_plus,
)
from .envelopes import EnvelopeParams, EnvelopeVerdict, degiorgi_factor, verify
from .errors import (
    BlowUpError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    IsslabError,
    ParameterError,
    SolverError,
    StepSizeError,
)
from .grid import Grid, GridFunction, NormTriple, norms
from .report import RunReport
from .runner import run
from .scenario import Scenario
from .signals import BoundarySignal, FieldSignal, InitialCondition, Profile
from .solvers import TrajectoryRecord, simulate
from .splitting import ExpTransform, exp_transform, split, simulate_split

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA", "backend_name",
    "ClosedLoopScenario", "VolterraKernel", "control_law", "control_law_shifted", "invert_kernel",
    "inverse_volterra_transform", "run_closed_loop", "solve_kernel", "verify_closed_loop_iss",
    "volterra_transform",
    "parse_config",
    "IterationWitness", "LevelSetScan", "check_iteration_lemma", "certify_trajectory", "scan_levels",
    "truncate_plus",
    "EnvelopeParams", "EnvelopeVerdict", "degiorgi_factor", "verify",
    "BlowUpError", "ConfigError", "ConvergenceError", "DimensionError", "IsslabError", "ParameterError",
    "SolverError", "StepSizeError",
    "Grid", "GridFunction", "NormTriple", "norms",
    "RunReport", "run", "Scenario",
    "BoundarySignal", "FieldSignal", "InitialCondition", "Profile",
    "TrajectoryRecord", "simulate",
    "ExpTransform", "exp_transform", "split", "simulate_split",
]
