"""Exception types shared across the package."""


class FsbenchError(Exception):
    """Base class for all fsbench errors."""


class DataError(FsbenchError):
    """Raised for invalid or unusable input data (bad CSV, schema mismatch, ...)."""


class ResampleError(FsbenchError):
    """Raised when a valid two-class resample cannot be produced."""


class ConfigError(FsbenchError):
    """Raised for invalid benchmark configuration."""
