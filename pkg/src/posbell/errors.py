"""Exception hierarchy.

Validation problems (bad input, wrong shapes, insufficient grids) derive from
``ValidationError`` and map to CLI exit code 1.  Numerical failures (solver
did not converge, quadrature error too large) derive from ``ConvergenceError``
and map to exit code 2.
"""

from __future__ import annotations


class PosBellError(Exception):
    """Base class for all package errors."""

    exit_code = 1

    def to_record(self) -> dict:
        record = {"error": type(self).__name__, "message": str(self), "exit_code": self.exit_code}
        for key in ("last_estimate", "required_x_max", "iterations"):
            value = getattr(self, key, None)
            if value is not None:
                record[key] = value
        return record


class ValidationError(PosBellError, ValueError):
    """Input outside the supported domain."""


class DomainError(ValidationError):
    """A parameter lies outside its mathematical domain."""


class ShapeError(ValidationError):
    """Array shapes or grids do not match."""


class ResolutionError(ValidationError):
    """The grid is too coarse for the requested construction."""


class ConfigurationError(ValidationError):
    """Grid and physical parameters are incompatible (e.g. not commensurate)."""


class SizeError(ValidationError):
    """Requested dense computation exceeds the size limit."""


class TruncationError(ValidationError):
    """The grid does not capture enough of the state.

    Attributes
    ----------
    required_x_max : float or None
        Estimated half-width needed to capture the state.
    """

    def __init__(self, message: str, required_x_max: float | None = None):
        super().__init__(message)
        self.required_x_max = required_x_max


class ConvergenceError(PosBellError, RuntimeError):
    """An iterative solver or quadrature failed to reach its tolerance.

    Attributes
    ----------
    last_estimate : float or None
        Best value available when the iteration stopped.
    """

    exit_code = 2

    def __init__(self, message: str, last_estimate: float | None = None, iterations: int | None = None):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.iterations = iterations


class SolverError(ConvergenceError):
    """Root bracketing or eigen-solver failure."""


class IntegrationError(ConvergenceError):
    """Adaptive quadrature reported an error above tolerance."""


class DecompositionError(ConvergenceError):
    """Two-projection decomposition failed its reconstruction check."""
