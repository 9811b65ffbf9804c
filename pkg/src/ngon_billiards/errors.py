"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class NgonBilliardsError(Exception):
    """Base class for all package errors."""


class DegenerateEdge(NgonBilliardsError):
    pass


class InvalidN(NgonBilliardsError, ValueError):
    pass


class InvalidM(NgonBilliardsError, ValueError):
    pass


class InvalidPolygon(NgonBilliardsError, ValueError):
    pass


class IrrationalAngle(NgonBilliardsError, ValueError):
    pass


class InvalidSurface(NgonBilliardsError, ValueError):
    pass


class ParallelHolonomies(NgonBilliardsError, ValueError):
    pass


class ZeroLengthRep(NgonBilliardsError, ValueError):
    pass


class EmptySample(NgonBilliardsError, ValueError):
    pass


class DegeneracyUnresolved(NgonBilliardsError):
    """A predicate stayed inside the uncertainty band and escalation was not allowed."""

    def __init__(self, message: str, *, margin: float | None = None, path: tuple[int, ...] = ()):
        super().__init__(message)
        self.margin = margin
        self.path = path


class ExplosionGuard(NgonBilliardsError):
    """The unfolding tree outgrew the node budget.

    ``partial`` holds whatever the enumerator had finished before giving up
    (per-depth counts of the completed levels).
    """

    def __init__(self, message: str, *, partial=None, nodes: int = 0):
        super().__init__(message)
        self.partial = partial
        self.nodes = nodes


class CalibrationFailed(NgonBilliardsError):
    def __init__(self, message: str, *, table=None):
        super().__init__(message)
        self.table = table
