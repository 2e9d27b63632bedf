"""Exception types raised across the package."""


class GWCError(Exception):
    """Base class for all package errors."""


class ModelError(GWCError, ValueError):
    """An offspring or immigration law is unusable."""


class BadPmf(ModelError):
    pass


class MassAtZero(ModelError):
    pass


class NotSupercritical(ModelError):
    pass


class DomainError(GWCError, ValueError):
    pass


class BasePointMismatch(GWCError, ValueError):
    pass


class OrderExceeded(GWCError, ValueError):
    pass


class QuadratureFailure(GWCError, ArithmeticError):
    pass


class ResourceLimit(GWCError, RuntimeError):
    pass


class SampleTooLarge(GWCError, ValueError):
    pass
