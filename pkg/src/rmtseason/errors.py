"""Exception hierarchy shared by the pipeline stages."""

from __future__ import annotations


class RmtSeasonError(Exception):
    """Base class for all errors raised by this package."""


class InputError(RmtSeasonError, ValueError):
    """Unreadable, empty or malformed input (CLI exit code 2)."""


class ValidationError(RmtSeasonError, ValueError):
    """Input was readable but violates a precondition (CLI exit code 3)."""


class ConvergenceError(RmtSeasonError, RuntimeError):
    """The eigensolver failed to reach the residual tolerance."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals
