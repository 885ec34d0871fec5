"""Exception types raised across the package.

Everything derives from HDGlueError so callers can catch one base class.
The subclasses also inherit the matching builtin (ValueError and friends)
to stay friendly to generic error handling.
"""


class HDGlueError(Exception):
    """Base class for every error this package raises on purpose."""


class InvalidDimensionError(HDGlueError, ValueError):
    """Hypervector dimension is zero, too small, or above the configured cap."""


class DimensionMismatchError(HDGlueError, ValueError):
    """Two operands have different dimensions (bits or embedding components)."""


class InvalidValueError(HDGlueError, ValueError):
    """A numeric input is out of range, non-finite, or otherwise malformed."""


class AccumulatorUnderflowError(HDGlueError, ArithmeticError):
    """A subtraction would drive an accumulator's total weight negative."""


class TooManyLevelsError(HDGlueError, ValueError):
    """Requested more quantization levels than the endpoint pair can support."""


class UntrainedModelError(HDGlueError, ValueError):
    """Prediction or fusion was asked of a model with no trained classes."""


class UnknownMemberError(HDGlueError, KeyError):
    """A fusion operation referenced a member name that does not exist."""


class DataFormatError(HDGlueError, ValueError):
    """A file or byte stream does not match the expected layout."""
