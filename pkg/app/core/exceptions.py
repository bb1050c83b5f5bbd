"""Error hierarchy for the simulator.

Every error carries the process exit code the CLI maps it to:
2 for configuration errors, 3 for data-format errors and 4 for numerical failures.
"""

from typing import Any


class LinkSimError(Exception):
    """Base class for all simulator errors."""

    exit_code: int = 1

    def __init__(self, message: str, **context: Any):
        """Store the message and optional structured context for the error record."""
        super().__init__(message)
        self.message = message
        self.context = context

    def to_record(self) -> dict[str, Any]:
        """Machine-readable error record."""
        return {
            "detail": self.message,
            "error_type": type(self).__name__,
            "exit_code": self.exit_code,
            "errors": [{"field": key, "message": str(value)} for key, value in sorted(self.context.items())],
        }


class ConfigError(LinkSimError, ValueError):
    """Invalid parameters or configuration."""

    exit_code = 2


class DimensionMismatchError(ConfigError):
    """Array or matrix dimensions do not agree."""


class AliasingError(ConfigError):
    """Power delay profile does not fit the frequency grid's unambiguous delay range."""


class DataFormatError(LinkSimError, ValueError):
    """Malformed external channel data."""

    exit_code = 3


class MalformedRowError(DataFormatError):
    """Row cannot be parsed (wrong header, column count or number syntax)."""


class MissingTupleError(DataFormatError):
    """A (frequency, sample, rx, tx) tuple is absent from the file."""


class DuplicateRowError(DataFormatError):
    """A (frequency, sample, rx, tx) tuple appears more than once."""


class NonUniformGridError(DataFormatError):
    """Frequencies do not form a uniform, strictly increasing grid."""


class NonFiniteValueError(DataFormatError):
    """A channel value is NaN or infinite."""


class NumericalError(LinkSimError, ArithmeticError):
    """Numerical failure during analysis."""

    exit_code = 4


class DegenerateReferenceError(NumericalError):
    """Reference measurement has (near-)zero average power."""


class SingularChannelError(NumericalError):
    """Channel matrix is too ill-conditioned for zero-forcing."""


class ZeroVarianceError(NumericalError):
    """A branch has no variance across the ensemble."""


class InsufficientPointsError(NumericalError):
    """Not enough usable points for a fit."""


class NonFiniteSymbolError(NumericalError):
    """A received symbol is NaN or infinite."""


class NoEnergyError(NumericalError):
    """An impulse set carries no energy."""
