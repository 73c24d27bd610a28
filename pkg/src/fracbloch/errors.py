class FracBlochError(Exception):
    """Base class for errors raised by this package."""


class DomainError(FracBlochError, ValueError):
    pass


class ConfigurationError(FracBlochError, ValueError):
    pass


class InvalidWeightError(FracBlochError, ValueError):
    pass


class NumericError(FracBlochError, ArithmeticError):
    pass


class TruncationError(FracBlochError):
    def __init__(self, message, suggested=None):
        super().__init__(message)
        self.suggested = suggested


class UnsupportedOrderError(FracBlochError, ValueError):
    pass


class SpecParseError(FracBlochError, ValueError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position
