class CocurError(Exception):
    """Base class for all errors raised by this package."""


class DataError(CocurError):
    """Malformed or inconsistent input data (corpora, labels, model files)."""


class ConfigError(CocurError):
    """Invalid configuration: unknown keys, bad values, missing requirements."""
