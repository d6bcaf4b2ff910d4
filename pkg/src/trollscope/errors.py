"""Shared exception types."""


class TrollscopeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(TrollscopeError):
    """Bad run configuration or malformed format spec (CLI exit code 2)."""


class DataError(TrollscopeError):
    """Input data violates a precondition (empty corpus, bad labels, ...)."""


class FitError(TrollscopeError):
    """A numerical fit could not be completed (rank deficiency, separation, ...)."""
