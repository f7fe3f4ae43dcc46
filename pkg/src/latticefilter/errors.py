"""Exception types shared across the package."""


class LatticeFilterError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(LatticeFilterError, ValueError):
    """A dimension argument is out of range or inconsistent."""


class DegenerateLikelihoodError(LatticeFilterError, ArithmeticError):
    """All candidate weights underflowed to zero; no resampling target exists."""


class SingularUpdateError(LatticeFilterError, ArithmeticError):
    """Innovation covariance in a measurement update is numerically singular."""


class SingularCovarianceError(LatticeFilterError, ArithmeticError):
    """A covariance matrix that must be positive definite is singular."""


class InsufficientParticlesError(LatticeFilterError, ValueError):
    """An operation needs more particles than the ensemble provides."""


class NumericError(LatticeFilterError, ArithmeticError):
    """A density or weight evaluated to a non-finite value."""


class ConfigError(LatticeFilterError, ValueError):
    """A configuration file or flag set is invalid; message names the key path."""


class MemoryBudgetError(LatticeFilterError, ValueError):
    """A precomputed tensor would exceed the configured memory budget."""
