"""Exception types raised across the package."""


class AimoleError(Exception):
    """Base class for all errors raised by aimole."""


class StructuralError(AimoleError, ValueError):
    """Shapes, dimensions or indices do not fit together."""


class PreconditionError(AimoleError, ValueError):
    """An operation was called with inputs outside its domain."""


class NumericError(AimoleError, ArithmeticError):
    """Non-finite values were passed to or produced by a computation."""


class DivergenceError(NumericError):
    """A simulation or roll-out left the admissible region.

    Attributes
    ----------
    sample_index : int
        1-based sample index at which divergence was detected.
    """

    def __init__(self, message, sample_index):
        super().__init__(message)
        self.sample_index = sample_index


class ConditioningError(NumericError):
    """A matrix factorization failed even after jitter escalation."""


class DegenerateNormalizationError(AimoleError, ZeroDivisionError):
    """The normalizing error norm is zero."""


class DegenerateWeightsError(AimoleError, ValueError):
    """An input or output channel is disconnected in the linearized model."""


class CalibrationError(AimoleError, RuntimeError):
    """Excitation calibration did not reach the required output level."""


class ConfigError(AimoleError, ValueError):
    """Invalid harness configuration file."""

    def __init__(self, message, line=None, key=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key
