"""Exception hierarchy. The CLI maps each family onto an exit code."""


class CoopnetError(Exception):
    """Base class for all package errors."""


class ConfigError(CoopnetError, ValueError):
    """Invalid parameters or usage (exit code 1)."""


class DataError(CoopnetError, ValueError):
    """Input data that cannot be processed (exit code 2)."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class EmptyGraphError(DataError):
    pass


class UndefinedMetricError(DataError):
    """A statistic whose value is mathematically undefined for the input."""


class InvariantError(CoopnetError, AssertionError):
    """Internal consistency violation (exit code 3)."""
