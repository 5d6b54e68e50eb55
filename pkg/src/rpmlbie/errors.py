"""Exception hierarchy shared by the library and the command line driver."""


class RpmlBieError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(RpmlBieError, ValueError):
    """Invalid user input: media, geometry, profile or run configuration."""

    exit_code = 2


class NumericalError(RpmlBieError, ArithmeticError):
    """A numerical stage could not deliver a trustworthy result."""

    exit_code = 3


class EigenfrequencyError(NumericalError):
    """Linear system (nearly) singular, typically an interior eigenfrequency."""


class BranchCutError(NumericalError):
    """A complexified distance landed on the branch cut of the square root."""

    def __init__(self, message, pairs=None):
        super().__init__(message)
        self.pairs = pairs if pairs is not None else []


class QuadratureError(NumericalError):
    """Spectral quadrature failed to reach the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
