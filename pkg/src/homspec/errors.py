"""Exception types shared across the package."""


class HomspecError(Exception):
    """Base class for all package errors."""


class InvalidArgument(HomspecError, ValueError):
    pass


class DegenerateInput(HomspecError, ValueError):
    pass


class DomainError(HomspecError, ValueError):
    """Input lies outside the range where a model or calibration is valid."""


class NotMeasurable(HomspecError, ValueError):
    pass


class NumericError(HomspecError, ArithmeticError):
    pass


class BaselineUndefined(DegenerateInput):
    """Too few large-delay samples to estimate a scan baseline."""
