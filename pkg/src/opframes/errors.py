"""Exception types raised across the package."""


class OpFramesError(Exception):
    pass


class NotPositive(OpFramesError, ValueError):
    pass


class DegenerateDenominator(OpFramesError, ValueError):
    pass


class DimensionMismatch(OpFramesError, ValueError):
    pass


class MeasureMismatch(OpFramesError, ValueError):
    pass


class CountMismatch(OpFramesError, ValueError):
    pass


class IndexOutOfRange(OpFramesError, IndexError):
    pass


class NotAFrame(OpFramesError, ValueError):
    pass


class ZeroK(OpFramesError, ValueError):
    pass


class BadParameter(OpFramesError, ValueError):
    pass


class ParseError(OpFramesError):
    """Malformed instance text. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(OpFramesError):
    """Well-formed instance text whose content violates a domain invariant."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
