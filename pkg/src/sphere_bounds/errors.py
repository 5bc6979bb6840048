"""Exception hierarchy shared by all modules."""


class SphereBoundsError(Exception):
    """Base class for errors raised by this package."""


class DomainError(SphereBoundsError, ValueError):
    """An argument lies outside the admissible parameter range."""


class SolverError(SphereBoundsError, RuntimeError):
    """A numerical solver failed to converge or to bracket a solution."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DataError(SphereBoundsError, ValueError):
    """Inconsistent or non-finite numerical data (NaN values, grid mismatch)."""
