"""Exception hierarchy shared by all wavesplit modules."""


class WavesplitError(Exception):
    """Base class for every error raised by this package."""


class MediumError(WavesplitError, ValueError):
    """Material tensor is not symmetric positive definite somewhere.

    ``point`` holds the transverse position where the check failed (or None
    for a constant tensor).
    """

    def __init__(self, message, point=None):
        where = None if point is None else tuple(float(v) for v in point)
        super().__init__(message if where is None else f"{message} (at x'={where})")
        self.point = point


class NumericGuardError(WavesplitError, ArithmeticError):
    """A numerical guard tripped (strip violation, singular block, overflow...)."""


class StripViolationError(NumericGuardError):
    """A point or a root lies inside the resolvent strip where it must not."""


class SingularBlockError(NumericGuardError):
    """A 2x2 block that must be inverted is (numerically) singular."""

    def __init__(self, message, cond=None):
        super().__init__(message if cond is None else f"{message} (condition number {cond:.3e})")
        self.cond = cond


class ConvergenceError(NumericGuardError):
    """An iteration did not converge."""


class OverflowGuardError(NumericGuardError):
    """A propagator norm exceeded the overflow guard."""


class DivergentIntegralError(WavesplitError, ValueError):
    """Requested lambda-integral does not converge (4m - n <= 0)."""


class GridMismatchError(WavesplitError, ValueError):
    """Two grids that must share geometry do not."""


class ConfigError(WavesplitError, ValueError):
    """Malformed or inconsistent configuration."""


class DependencyError(WavesplitError, RuntimeError):
    """A pipeline stage was requested before the stage it depends on."""
