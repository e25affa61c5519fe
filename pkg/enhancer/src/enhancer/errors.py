class EnhancerError(Exception):
    """Base class for enhancement-stage errors."""


class ManifestError(EnhancerError):
    """Training manifest is unreadable or malformed."""


class InsufficientData(EnhancerError):
    """Fewer cases than needed for a train/validation split."""


class ModelLoadError(EnhancerError):
    """Saved model artifact cannot be loaded."""


class DimensionMismatch(EnhancerError):
    """Volume and mask shapes disagree."""
