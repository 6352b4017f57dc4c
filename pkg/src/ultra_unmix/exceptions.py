"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: parameter/usage problems exit with 1,
file-format and I/O problems with 2, numerical failures with 3.
"""


class UltraUnmixError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(UltraUnmixError, ValueError):
    """An argument value is invalid (bad flag, negative weight, zero rank...)."""


class DimensionError(ParameterError):
    """Array shapes are inconsistent with the requested operation."""


class InsufficientDataError(ParameterError):
    """Not enough usable data points for a statistical procedure."""


class FileFormatError(UltraUnmixError, ValueError):
    """A data file does not conform to its declared format."""


class NumericalError(UltraUnmixError, RuntimeError):
    """A solver failed to converge or produced non-finite values."""


class GenerationError(NumericalError):
    """A synthetic-data generator could not meet its target after retries."""
