"""Exception hierarchy shared by all corrocal modules."""

from numpy.linalg import LinAlgError

__all__ = [
    "CorrocalError",
    "DomainError",
    "BracketError",
    "FitError",
    "FormatError",
    "ConfigError",
    "DataError",
    "DegenerateError",
    "DivergenceError",
    "LinAlgError",
]


class CorrocalError(Exception):
    """Base class for errors raised by corrocal."""


class DomainError(CorrocalError, ValueError):
    """An argument lies outside the mathematical domain of the model."""


class BracketError(CorrocalError):
    """A root-finding bracket does not contain a sign change."""


class FitError(CorrocalError):
    """A regression failed to converge from every initialization."""


class FormatError(CorrocalError, ValueError):
    """Malformed input file or time series."""


class ConfigError(CorrocalError, ValueError):
    """Invalid run or analysis configuration."""


class DataError(CorrocalError, ValueError):
    """Input data is insufficient for the requested operation."""


class DegenerateError(CorrocalError):
    """Model output carries no variance; indices are undefined."""


class DivergenceError(CorrocalError):
    """Training produced a non-finite loss."""
