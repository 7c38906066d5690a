"""Exception hierarchy for odoflow."""


class OdoflowError(Exception):
    """Base class for every error raised by this package."""


class OrbitOverflow(OdoflowError):
    """The odometer carried past the last coordinate of the truncation."""


class OrbitUnderflow(OdoflowError):
    """The all-zero word has no predecessor at the current depth."""


class DepthMismatch(OdoflowError, ValueError):
    pass


class ArityMismatch(OdoflowError, ValueError):
    pass


class DomainError(OdoflowError, ValueError):
    pass


class HorizonExceeded(OdoflowError):
    """Flow evaluation needed a ceiling value or orbit point outside the truncation.

    ``point`` is the last fully determined base prefix and ``height`` the
    (possibly out-of-fiber) height reached there.
    """

    def __init__(self, message, point=None, height=None):
        super().__init__(message)
        self.point = point
        self.height = height


class PrecisionExhausted(OdoflowError):
    """An integer sits too close to a transcendental endpoint for the precision cap."""


class Undecidable(OdoflowError):
    """A certified comparison could not be resolved within the precision cap."""

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class BandExceedsCeiling(OdoflowError, ValueError):
    pass


class RangeUndecidableAtDepth(OdoflowError, ValueError):
    pass


class NotMeasurePreserving(OdoflowError, ValueError):
    pass
