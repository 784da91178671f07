"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``ConfigError`` -> 3,
``NumericalError`` -> 4.
"""


class DysonCLTError(Exception):
    pass


class ConfigError(DysonCLTError, ValueError):
    """Invalid experiment configuration or argument domain."""


class DomainError(ConfigError):
    """An argument lies outside the domain of an operation."""


class OutOfRangeError(DomainError):
    pass


class CapacityError(ConfigError):
    """Requested storage exceeds the configured cap."""


class NumericalError(DysonCLTError, ArithmeticError):
    pass


class AdmissibilityError(NumericalError):
    """A covariance matrix on the time grid is not positive semidefinite."""


class SingularConfigurationError(NumericalError):
    pass


class BijectivityError(NumericalError):
    pass


class DegenerateEstimateError(NumericalError):
    pass


class QuarantineError(NumericalError):
    """Too many Monte Carlo samples produced non-finite statistics."""
