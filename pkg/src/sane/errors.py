"""Exception hierarchy shared by every module of the package."""


class SaneError(Exception):
    """Base class for all package errors."""


class DomainError(SaneError, ValueError):
    """A location lies outside the domain of a black box."""


class ParameterError(SaneError, ValueError):
    """An argument violates a numeric precondition."""


class ParseError(SaneError, ValueError):
    """A data file could not be parsed."""


class GpFitError(SaneError, RuntimeError):
    """The training covariance could not be factorized, even with jitter escalation."""


class GateInactiveError(SaneError):
    """The gate needs at least one good and one bad labeled location."""


class ExhaustedError(SaneError):
    """No unexplored candidate remains."""


class ConfigError(SaneError, ValueError):
    """A run configuration is invalid.

    ``key`` names the offending configuration entry.
    """

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class UndefinedMetricError(SaneError, ValueError):
    """A metric has no defined value for its inputs."""
