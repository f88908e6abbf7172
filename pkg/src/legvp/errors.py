"""Exception types shared across the solver."""

__all__ = ["ConfigurationError", "SolverError", "FitError"]


class ConfigurationError(ValueError):
    """Invalid domain, species, or run configuration."""


class SolverError(RuntimeError):
    """Nonlinear solve failed or produced non-finite values."""


class FitError(RuntimeError):
    """Time-series fit could not be performed (too few peaks/oscillations)."""
