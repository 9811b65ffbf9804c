"""Planar primitives: vectors, wedge products, isometries and incidence tests.

Everything here works in double precision.  The enumeration engine keeps its
own vectorized copies of these formulas and falls back to mpmath replays when
a predicate lands inside the uncertainty band configured by
:class:`PrecisionConfig`.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum

from .errors import DegenerateEdge

PRECISION_ENV_VAR = "NGON_WORKING_DIGITS"


@dataclass(frozen=True, slots=True)
class PlanarVec:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite planar vector ({self.x}, {self.y})")

    def __add__(self, other: PlanarVec) -> PlanarVec:
        return PlanarVec(self.x + other.x, self.y + other.y)

    def __sub__(self, other: PlanarVec) -> PlanarVec:
        return PlanarVec(self.x - other.x, self.y - other.y)

    def __neg__(self) -> PlanarVec:
        return PlanarVec(-self.x, -self.y)

    def __mul__(self, scale: float) -> PlanarVec:
        return PlanarVec(self.x * scale, self.y * scale)

    __rmul__ = __mul__

    def __truediv__(self, scale: float) -> PlanarVec:
        return PlanarVec(self.x / scale, self.y / scale)

    def dot(self, other: PlanarVec) -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def angle(self) -> float:
        return math.atan2(self.y, self.x)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)

    @classmethod
    def polar(cls, radius: float, theta: float) -> PlanarVec:
        return cls(radius * math.cos(theta), radius * math.sin(theta))


def wedge(u: PlanarVec, v: PlanarVec) -> float:
    """Signed area of the parallelogram spanned by ``u`` and ``v``."""
    return u.x * v.y - u.y * v.x


@dataclass(frozen=True, slots=True)
class PrecisionConfig:
    """Tolerances for incidence predicates.

    Relative margins above ``epsilon_incidence`` are trusted in double
    precision.  Margins below ``epsilon_zero`` are read as exact incidences
    (double-precision round-off in the enumerator stays far below it).
    Anything in between is re-evaluated with ``working_digits`` decimal
    digits, unless ``escalate`` is off, in which case the enumerator raises
    :class:`~ngon_billiards.errors.DegeneracyUnresolved`.
    """

    epsilon_incidence: float = 1e-9
    working_digits: int = 50
    epsilon_zero: float = 1e-12
    escalate: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon_incidence < 1e-6):
            raise ValueError("epsilon_incidence must lie in (0, 1e-6)")
        if not (0.0 < self.epsilon_zero <= self.epsilon_incidence):
            raise ValueError("epsilon_zero must lie in (0, epsilon_incidence]")
        if self.working_digits < 1:
            raise ValueError("working_digits must be positive")

    @classmethod
    def from_env(cls, **overrides) -> PrecisionConfig:
        raw = os.environ.get(PRECISION_ENV_VAR)
        if raw and "working_digits" not in overrides:
            overrides["working_digits"] = int(raw)
        return cls(**overrides)

    def to_dict(self) -> dict:
        return {
            "epsilon_incidence": self.epsilon_incidence,
            "epsilon_zero": self.epsilon_zero,
            "working_digits": self.working_digits,
            "escalate": self.escalate,
        }


DEFAULT_PRECISION = PrecisionConfig()


@dataclass(frozen=True, slots=True)
class Isometry:
    """Map ``p -> linear @ p + translation`` with an orthogonal linear part."""

    linear: tuple[tuple[float, float], tuple[float, float]]
    translation: PlanarVec

    def __post_init__(self) -> None:
        (a, b), (c, d) = self.linear
        tol = 1e-9
        if abs(a * a + c * c - 1) > tol or abs(b * b + d * d - 1) > tol or abs(a * b + c * d) > tol:
            raise ValueError("linear part of an isometry must be orthogonal")

    @classmethod
    def identity(cls) -> Isometry:
        return cls(((1.0, 0.0), (0.0, 1.0)), PlanarVec(0.0, 0.0))

    @classmethod
    def translation_by(cls, v: PlanarVec) -> Isometry:
        return cls(((1.0, 0.0), (0.0, 1.0)), v)

    @classmethod
    def reflection(cls, a: PlanarVec, b: PlanarVec) -> Isometry:
        """Reflection across the line through ``a`` and ``b``."""
        d = b - a
        length = d.norm()
        if length == 0.0:
            raise DegenerateEdge("reflection line needs two distinct points")
        ux, uy = d.x / length, d.y / length
        c2, s2 = ux * ux - uy * uy, 2 * ux * uy
        linear = ((c2, s2), (s2, -c2))
        moved = PlanarVec(c2 * a.x + s2 * a.y, s2 * a.x - c2 * a.y)
        return cls(linear, a - moved)

    @property
    def det(self) -> float:
        (a, b), (c, d) = self.linear
        return a * d - b * c

    def apply(self, p: PlanarVec) -> PlanarVec:
        (a, b), (c, d) = self.linear
        return PlanarVec(a * p.x + b * p.y + self.translation.x, c * p.x + d * p.y + self.translation.y)

    def apply_linear(self, v: PlanarVec) -> PlanarVec:
        (a, b), (c, d) = self.linear
        return PlanarVec(a * v.x + b * v.y, c * v.x + d * v.y)

    def compose(self, inner: Isometry) -> Isometry:
        """Return ``self ∘ inner``."""
        (a, b), (c, d) = self.linear
        (e, f), (g, h) = inner.linear
        linear = ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))
        return Isometry(linear, self.apply(inner.translation))

    def inverse(self) -> Isometry:
        (a, b), (c, d) = self.linear
        transposed = ((a, c), (b, d))
        t = self.translation
        back = PlanarVec(-(a * t.x + c * t.y), -(b * t.x + d * t.y))
        return Isometry(transposed, back)


def reflect_across_edge(
    p: PlanarVec, a: PlanarVec, b: PlanarVec, config: PrecisionConfig = DEFAULT_PRECISION
) -> PlanarVec:
    scale = max(a.norm(), b.norm(), 1.0)
    if (b - a).norm() < config.epsilon_incidence * scale:
        raise DegenerateEdge(f"edge {a} -> {b} is degenerate")
    return Isometry.reflection(a, b).apply(p)


class CrossingKind(str, Enum):
    NO_CROSS = "NoCross"
    INTERIOR_TRANSVERSAL = "InteriorTransversal"
    ENDPOINT_TOUCH = "EndpointTouch"
    COLLINEAR_OVERLAP = "Collinear-Overlap"


def _side(origin: PlanarVec, direction: PlanarVec, p: PlanarVec, tol: float) -> int:
    # distance of p from the line, compared against an absolute length tolerance
    dist = wedge(direction, p - origin) / direction.norm()
    if dist > tol:
        return 1
    if dist < -tol:
        return -1
    return 0


def _within(p: PlanarVec, a: PlanarVec, b: PlanarVec, tol: float) -> bool:
    d = b - a
    length = d.norm()
    t = (p - a).dot(d) / length
    return -tol <= t <= length + tol


def segment_crossing(
    seg_a: tuple[PlanarVec, PlanarVec],
    seg_b: tuple[PlanarVec, PlanarVec],
    config: PrecisionConfig = DEFAULT_PRECISION,
) -> CrossingKind:
    """Classify how two closed segments meet.

    A single length tolerance (``epsilon_incidence`` times the longer
    segment) is used for every point-on-line test, which keeps the answer
    symmetric in the two arguments.
    """
    a0, a1 = seg_a
    b0, b1 = seg_b
    da, db = a1 - a0, b1 - b0
    la, lb = da.norm(), db.norm()
    if la == 0.0 or lb == 0.0:
        raise DegenerateEdge("segments must have distinct endpoints")
    tol = config.epsilon_incidence * max(la, lb)

    s_b0, s_b1 = _side(a0, da, b0, tol), _side(a0, da, b1, tol)
    s_a0, s_a1 = _side(b0, db, a0, tol), _side(b0, db, a1, tol)

    if s_b0 == 0 and s_b1 == 0 and s_a0 == 0 and s_a1 == 0:
        # project everything on the longer segment's direction
        base, axis = (a0, da) if la >= lb else (b0, db)
        unit = axis / axis.norm()
        ia = sorted(((a0 - base).dot(unit), (a1 - base).dot(unit)))
        ib = sorted(((b0 - base).dot(unit), (b1 - base).dot(unit)))
        overlap = min(ia[1], ib[1]) - max(ia[0], ib[0])
        if overlap > tol:
            return CrossingKind.COLLINEAR_OVERLAP
        if overlap >= -tol:
            return CrossingKind.ENDPOINT_TOUCH
        return CrossingKind.NO_CROSS

    if s_b0 * s_b1 < 0 and s_a0 * s_a1 < 0:
        return CrossingKind.INTERIOR_TRANSVERSAL

    touching = (
        (s_b0 == 0 and _within(b0, a0, a1, tol))
        or (s_b1 == 0 and _within(b1, a0, a1, tol))
        or (s_a0 == 0 and _within(a0, b0, b1, tol))
        or (s_a1 == 0 and _within(a1, b0, b1, tol))
    )
    return CrossingKind.ENDPOINT_TOUCH if touching else CrossingKind.NO_CROSS
