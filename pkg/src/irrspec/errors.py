"""Exception types shared across the package."""


class IrrspecError(Exception):
    """Base class for all package errors."""


class DomainError(IrrspecError, ValueError):
    """An argument is outside the mathematically valid domain."""


class MarginError(DomainError):
    """A shift or frequency violates the boundary-margin requirements."""


class ConvergenceError(IrrspecError, RuntimeError):
    """An iterative construction failed to meet its tolerance."""


class SizeError(IrrspecError, ValueError):
    """An input exceeds a hard size cap (e.g. dense-factorization limits)."""


class FactorizationError(IrrspecError, RuntimeError):
    """A covariance matrix could not be factorized, even after jitter."""


class EmbeddingError(IrrspecError, RuntimeError):
    """Circulant embedding produced negative eigenvalues beyond tolerance."""


class ConfigError(IrrspecError, ValueError):
    """A user-supplied configuration value is invalid."""
