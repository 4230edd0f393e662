"""Exception types shared across the package."""


class DisbecError(Exception):
    """Base class for package errors."""


class DomainError(DisbecError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class UsageError(DisbecError, ValueError):
    """Inputs are inconsistent with each other or with the call contract."""


class ConvergenceError(DisbecError, RuntimeError):
    """An iterative solver stopped without meeting its tolerances.

    ``last`` carries the final iterate (or partial result) and ``diagnostics``
    a dict of whatever the solver knew when it gave up.
    """

    def __init__(self, message, last=None, diagnostics=None):
        super().__init__(message)
        self.last = last
        self.diagnostics = dict(diagnostics or {})


class SolveTimeout(ConvergenceError):
    """A solve exceeded its wall-time budget."""
