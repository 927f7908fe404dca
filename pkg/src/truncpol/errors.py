"""Exception types shared across the package."""

from __future__ import annotations


class UnboundedSetError(ValueError):
    """A support or optimization query diverged because the set is unbounded
    in the queried direction."""


class EmptySetError(ValueError):
    """The constraint set has no feasible point."""


class DegenerateSetError(ValueError):
    """The constraint set has empty interior (no strictly feasible point)."""


class InvalidStateError(ValueError):
    """An environment state violates its preconditions (inside an obstacle,
    outside bounds, outside the invariant set)."""


class LowMassError(ArithmeticError):
    """The truncated mass underflows double precision.

    Carries the log-space estimate so callers can still reason about how far
    below the representable range the mass fell.
    """

    def __init__(self, message: str, log_mass_estimate: float):
        super().__init__(message)
        self.log_mass_estimate = log_mass_estimate


class NumericError(RuntimeError):
    """An iterative solver failed to converge.  Carries the final residual."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class InvariantViolationError(RuntimeError):
    """An internal consistency check failed (e.g. a constructed feasible set
    turned out empty where theory guarantees nonemptiness)."""
