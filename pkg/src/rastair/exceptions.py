"""Exception hierarchy shared across the solver pipeline."""


class RastairError(Exception):
    """Base class for all package errors."""


class ProblemError(RastairError, ValueError):
    pass


class DisconnectedGraph(ProblemError):
    pass


class DanglingStateReference(ProblemError):
    pass


class DuplicateMeasurementKey(ProblemError):
    pass


class OrphanLandmark(ProblemError):
    pass


class RankDeficientBlock(RastairError, ValueError):
    pass


class ZeroNormColumn(RastairError, ValueError):
    pass


class StaleCacheError(RastairError, RuntimeError):
    """A block update read neighbour columns older than the latest exchange."""


class NonDecreasingCostBug(RastairError, AssertionError):
    """An accepted RBCD update raised the cost."""


class NotCriticalPoint(RastairError, ValueError):
    pass


class LanczosNoConverge(RastairError, RuntimeError):
    pass


class EscapeFailed(RastairError, RuntimeError):
    pass


class NotCertifiedAtPMax(RastairError, RuntimeError):
    """Raised by strict callers; carries the best available report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParseError(RastairError, ValueError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnitNormViolation(ParseError):
    pass


class BaseDatasetTooSmall(RastairError, ValueError):
    pass


class DegenerateConfiguration(RastairError, ValueError):
    pass


class EmptyOverlap(RastairError, ValueError):
    pass


class NonPositiveLowerBound(RastairError, ValueError):
    pass
