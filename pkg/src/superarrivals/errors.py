"""Exception hierarchy shared by the simulation modules."""


class SuperarrivalError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(SuperarrivalError, ValueError):
    pass


class ShapeError(SuperarrivalError, ValueError):
    pass


class DomainError(SuperarrivalError, ValueError):
    pass


class ConfigurationError(SuperarrivalError, ValueError):
    pass


class UnsupportedError(SuperarrivalError, ValueError):
    pass


class NumericalError(SuperarrivalError, ArithmeticError):
    pass


class DivergenceError(NumericalError):
    pass


class UndefinedSectorError(SuperarrivalError, ValueError):
    """Transmitted-sector quantity requested while T(t) is below the floor."""


class IntegrationDegenerateError(SuperarrivalError):
    """A trajectory walked into a masked (near-node) region.

    The partial trajectory integrated so far is attached as ``trajectory``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class WindowOpenError(SuperarrivalError):
    """Deviation detected but the curves never cross before the end of the run."""

    def __init__(self, message, t_d):
        super().__init__(message)
        self.t_d = t_d


class DegenerateReferenceError(SuperarrivalError, ZeroDivisionError):
    pass


class ConfigValidationError(ConfigurationError):
    """Raised with the dotted name of the offending field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConfigSyntaxError(ConfigurationError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column
