"""Exception hierarchy for ratioreg."""


class RatioRegError(Exception):
    """Base class for all errors raised by this package."""


class InputError(RatioRegError, ValueError):
    """An argument is outside its documented domain."""


class DegenerateDenominatorError(RatioRegError, ZeroDivisionError):
    """The estimator denominator is exactly zero."""


class AlignmentError(RatioRegError):
    """Two series cannot be paired under the requested tolerance."""

    def __init__(self, message, index=None, report=None):
        super().__init__(message)
        self.index = index
        self.report = report


class CapacityError(AlignmentError):
    """Not enough observed points to build disjoint interpolation pairs."""


class ExtrapolationError(AlignmentError):
    """An interpolation target lies outside the observed time span."""


class PremiseViolationError(RatioRegError):
    """A simulation premise (e.g. bounded channel mismatch) does not hold."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class CsvFormatError(RatioRegError, ValueError):
    """A CSV input could not be parsed; the message carries the line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
