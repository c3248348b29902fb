"""Exception types shared across the package."""


class GraphbootError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(GraphbootError, ValueError):
    """A model or plan parameter is outside its valid range."""


class UnsupportedMethodError(GraphbootError, ValueError):
    """An exact/closed-form evaluation was requested where only sampling works."""


class GraphFormatError(GraphbootError, ValueError):
    """An edge-list file violates the expected format."""


class BinCountError(GraphbootError, ValueError):
    """No admissible histogram bin count exists for this graph size."""


class ConfigError(GraphbootError, ValueError):
    """An experiment configuration file is malformed or inconsistent."""
