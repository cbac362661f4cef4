"""Exception types raised across the package."""

from __future__ import annotations


class MengerKitError(Exception):
    """Base class for all library errors."""


class EmptyMeasureError(MengerKitError, ValueError):
    pass


class MeasureFormatError(MengerKitError, ValueError):
    """Bad measure CSV; message carries the 1-based line number."""


class ZeroSideLengthError(MengerKitError, ValueError):
    pass


class NotNestedError(MengerKitError, ValueError):
    pass


class EmptySquareError(MengerKitError, ValueError):
    pass


class CenterNotInHalfError(MengerKitError, ValueError):
    pass


class InapplicableError(MengerKitError, ValueError):
    """Raised when the hypotheses of a check do not hold for the given input."""


class IndexOutOfRangeError(MengerKitError, IndexError):
    pass


class DimensionMismatchError(MengerKitError, ValueError):
    pass


class EpsTooLargeError(MengerKitError, ValueError):
    pass


class PreconditionViolated(MengerKitError, ValueError):
    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        msg = condition if not detail else f"{condition}: {detail}"
        super().__init__(msg)


class CurveMissesSquareError(MengerKitError, ValueError):
    pass


class DegenerateCurveError(MengerKitError, ValueError):
    pass


class MapUndefinedError(MengerKitError, ValueError):
    pass


class TooFewAtomsError(MengerKitError, ValueError):
    pass


class EmptySupportError(MengerKitError, ValueError):
    pass


class BadSpecError(MengerKitError, ValueError):
    pass
