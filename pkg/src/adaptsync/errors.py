"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes, so every failure that can
reach a user should be one of them.
"""

from __future__ import annotations


class AdaptSyncError(Exception):
    """Base class for all library errors."""


class ParameterError(AdaptSyncError, ValueError):
    """An argument violates an operation's precondition."""


class SizeError(ParameterError):
    """A problem is larger than the configured cap."""


class StructureError(AdaptSyncError, ValueError):
    """A matrix lacks the structure an operation requires (circulant, symmetric)."""


class ExistenceError(AdaptSyncError):
    """The in-phase synchronous state does not exist (non-constant row sums)."""

    def __init__(self, message: str, max_deviation: float):
        super().__init__(message)
        self.max_deviation = max_deviation


class NumericError(AdaptSyncError, ArithmeticError):
    """An iteration failed to converge or produced non-finite values."""

    def __init__(self, message: str, time: float | None = None, partial=None):
        super().__init__(message)
        self.time = time
        # whatever was computed before the failure, e.g. a truncated series
        self.partial = partial


class CertificationError(AdaptSyncError):
    """A certification clause failed."""

    def __init__(self, clause: str, message: str):
        super().__init__(f"clause ({clause}): {message}")
        self.clause = clause
