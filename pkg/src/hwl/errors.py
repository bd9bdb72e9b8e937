"""Exception types shared across the package."""


class HwlError(Exception):
    """Base class for all package errors."""


class ModelMismatchError(HwlError):
    """Operands live on dyadic models of different depths."""


class InvalidIndexError(HwlError):
    """Dyadic index outside the valid range for the requested operation."""


class DomainError(HwlError):
    """Value outside the mathematical domain (nonpositive weight, point outside a Bellman domain, ...)."""


class CapacityError(HwlError):
    """Exhaustive enumeration requested beyond the supported size cap."""


class ConvergenceError(HwlError):
    """Iteration cap reached without convergence; carries the best estimate so far."""

    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate


class StencilError(HwlError):
    """Finite-difference stencil cannot be placed inside the domain."""


class ConfigError(HwlError):
    """Invalid scenario configuration."""
