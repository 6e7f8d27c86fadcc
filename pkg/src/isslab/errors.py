"""Exception hierarchy shared by all modules."""


class IsslabError(Exception):
    """Base class for errors raised by isslab."""


class DimensionError(IsslabError, ValueError):
    """Grid or array sizes are incompatible with the requested operation."""


class ParameterError(IsslabError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class ConfigError(IsslabError):
    """A scenario configuration could not be parsed or validated.

    ``problems`` collects every validation message, not just the first.
    """

    def __init__(self, problems, path=None):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        self.path = path
        head = f"{path}: " if path else ""
        super().__init__(head + "; ".join(self.problems))


class SolverError(IsslabError, RuntimeError):
    """A time step could not be completed.  ``time`` is the failing step time."""

    def __init__(self, message, time=None):
        self.time = time
        if time is not None:
            message = f"{message} (t = {time:.6g})"
        super().__init__(message)


class StepSizeError(SolverError):
    """The explicit convection term violates its CFL-type guard."""


class BlowUpError(SolverError):
    """The solution became non-finite or exceeded the blow-up threshold."""


class ConvergenceError(IsslabError, RuntimeError):
    """A successive-approximation iteration did not reach its tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
