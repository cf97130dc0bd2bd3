"""Exception hierarchy shared by every module of the package."""


class PscError(Exception):
    """Base class for all errors raised by psc_operads."""


class InvalidParameter(PscError, ValueError):
    pass


# profiles

class OutOfDomain(PscError, ValueError):
    pass


class TipSingularity(PscError, ValueError):
    pass


class NonPositiveProfile(PscError, ValueError):
    pass


class NonPositiveScale(PscError, ValueError):
    pass


class AngleOutOfRange(PscError, ValueError):
    pass


class SearchFailed(PscError, RuntimeError):
    pass


class SeamMismatch(PscError, ValueError):
    """Two pieces disagree at a seam; ``gap`` holds (value gap, slope gap)."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


# descriptors

class WrongBoundaryKind(PscError, ValueError):
    pass


class NotATorpedoSite(PscError, ValueError):
    pass


class NotAHeadSite(PscError, ValueError):
    pass


class NonPositiveRho(PscError, ValueError):
    pass


class NotAxisSymmetric(PscError, ValueError):
    pass


class InvalidDescriptor(PscError, ValueError):
    pass


# operads

class ArityMismatch(PscError, ValueError):
    pass


class InvalidInput(PscError, ValueError):
    pass


class SizeMismatch(PscError, ValueError):
    pass


class ParseError(PscError, ValueError):
    """Syntax or semantic error in one of the text formats."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
        self.position = position
