"""Exception types that map onto the CLI exit codes."""


class CrossIdError(ValueError):
    """Base class for crossid errors."""


class DataError(CrossIdError):
    """Malformed or insufficient input data (CLI exit code 1)."""


class ConfigError(CrossIdError):
    """Invalid configuration (CLI exit code 2)."""
