"""Exception hierarchy shared across the package.

Two families matter to callers: ``DataError`` for malformed or
inconsistent inputs and ``NumericalError`` for estimation failures.
The CLI maps them to distinct exit codes.
"""


class FuelcastError(Exception):
    """Base class for every error raised by this package."""


class DataError(FuelcastError):
    """Input data is malformed, incomplete, or violates a contract."""


class NumericalError(FuelcastError):
    """A numerical procedure failed (degenerate input, no convergence)."""
