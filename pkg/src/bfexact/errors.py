"""Exception hierarchy shared by every module."""


class BFExactError(Exception):
    """Base class for errors raised by bfexact."""


class DomainError(BFExactError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateDataError(BFExactError, ValueError):
    """The data have zero spread, so no finite test statistic exists."""


class InsufficientSampleError(DomainError):
    """Too few observations for the requested statistic."""


class NumericAccuracyError(BFExactError, ArithmeticError):
    """A quadrature or root-finding step missed its tolerance."""


class ConditioningError(NumericAccuracyError):
    """A matrix that must be inverted is numerically singular."""


class NoRealSolutionError(DomainError):
    """A quadratic system has no real root for the given inputs."""


class ProtocolError(BFExactError, ValueError):
    """Inputs violate a multi-step protocol (e.g. stage-two data that do not
    extend the stage-one samples)."""
