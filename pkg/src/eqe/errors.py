"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """An iterative numerical scheme failed to reach its tolerance.

    Carries the best estimate produced so far (when one exists) and the
    amount of work spent, so callers can decide whether to fall back to a
    different method or give up.
    """

    def __init__(self, message: str, *, best_estimate=None, work: int | None = None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.work = work


class InfeasibleMomentsError(ValueError):
    """No distribution of the family matches the requested moments.

    ``ratio`` is the offending value of c4 / c2**2 and ``boundary`` the
    largest ratio attainable in the given dimension (the Gaussian limit).
    """

    def __init__(self, message: str, *, ratio: float | None = None,
                 boundary: float | None = None):
        super().__init__(message)
        self.ratio = ratio
        self.boundary = boundary
