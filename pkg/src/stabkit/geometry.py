"""Exact-arithmetic geometric primitives: rectangles, stacked shapes, segments.

All coordinates are `fractions.Fraction`; nothing in the core ever touches a
float, so equality tests on derived quantities are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Coord = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class GeometryError(ValueError):
    pass


class InvalidShapeError(GeometryError):
    """Raised when an operation requires a valid stacked shape and gets none."""


class CostMismatchError(GeometryError):
    """Solution cost field disagrees with the sum of its segment lengths."""


def to_coord(value: Union[int, str, Fraction]) -> Fraction:
    """Convert an int, Fraction, "p/q" string or decimal string to an exact Coord.

    Floats are rejected: they would smuggle rounding into the exact core.
    """
    if isinstance(value, bool):
        raise GeometryError(f"not a coordinate: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise GeometryError(f"cannot parse coordinate {value!r}") from exc
    raise GeometryError(f"unsupported coordinate type: {type(value).__name__}")


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle [xl, xr] x [yb, yt]."""

    xl: Coord
    xr: Coord
    yb: Coord
    yt: Coord

    def __post_init__(self):
        if self.xl > self.xr or self.yb > self.yt:
            raise GeometryError(
                f"degenerate rectangle bounds: [{self.xl},{self.xr}]x[{self.yb},{self.yt}]"
            )

    @property
    def width(self) -> Coord:
        return self.xr - self.xl

    @property
    def height(self) -> Coord:
        return self.yt - self.yb

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.xl <= other.xl
            and other.xr <= self.xr
            and self.yb <= other.yb
            and other.yt <= self.yt
        )


def rect(xl, xr, yb, yt) -> Rect:
    """Rect constructor accepting anything `to_coord` accepts."""
    return Rect(to_coord(xl), to_coord(xr), to_coord(yb), to_coord(yt))


@dataclass(frozen=True)
class HSegment:
    """Closed horizontal segment [xl, xr] x {y}; its cost is its length."""

    xl: Coord
    xr: Coord
    y: Coord

    def __post_init__(self):
        if self.xl > self.xr:
            raise GeometryError(f"segment with xl > xr: [{self.xl},{self.xr}]")

    @property
    def length(self) -> Coord:
        return self.xr - self.xl

    def key(self):
        return (self.y, self.xl, self.xr)


def segment(xl, xr, y) -> HSegment:
    return HSegment(to_coord(xl), to_coord(xr), to_coord(y))


@dataclass(frozen=True)
class KShape:
    """Stack of rectangles, bottom to top.

    Adjacent rectangles must share their full horizontal interface, with one
    edge containing the other; `validate_kshape` checks this.
    """

    rects: tuple[Rect, ...]

    @property
    def w_min(self) -> Coord:
        return min(r.width for r in self.rects)

    @property
    def w_max(self) -> Coord:
        return max(r.width for r in self.rects)

    @property
    def x_min(self) -> Coord:
        return min(r.xl for r in self.rects)

    @property
    def x_max(self) -> Coord:
        return max(r.xr for r in self.rects)

    @property
    def y_min(self) -> Coord:
        return self.rects[0].yb

    @property
    def y_max(self) -> Coord:
        return self.rects[-1].yt


def kshape(rects: Iterable[Rect]) -> KShape:
    return KShape(tuple(rects))


@dataclass(frozen=True)
class Instance:
    """A stabbing instance: shapes plus the declared per-shape stack bound k."""

    shapes: tuple[KShape, ...]
    k: int

    @property
    def n(self) -> int:
        return len(self.shapes)


def instance(shapes: Iterable[KShape], k: int | None = None) -> Instance:
    shapes = tuple(shapes)
    if k is None:
        k = max((len(s.rects) for s in shapes), default=1)
    return Instance(shapes, k)


@dataclass(frozen=True)
class Solution:
    segments: tuple[HSegment, ...]
    cost: Coord

    @classmethod
    def of_segments(cls, segments: Iterable[HSegment]) -> "Solution":
        segs = tuple(sorted(segments, key=HSegment.key))
        return cls(segs, sum((s.length for s in segs), ZERO))


EMPTY_SOLUTION = Solution((), ZERO)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    errors: tuple[str, ...] = ()


def validate_kshape(shape: KShape) -> ValidationReport:
    """Check the stacked-shape invariants; reports the first offending pair.

    Rect indices in messages are 1-based, matching the bottom-to-top stack
    order.
    """
    errors: list[str] = []
    if not shape.rects:
        return ValidationReport(False, ("shape has no rectangles",))
    for i, (lo, hi) in enumerate(zip(shape.rects, shape.rects[1:]), start=1):
        if lo.yt < hi.yb:
            errors.append(f"gap between rect {i} and {i + 1}")
            break
        if lo.yt > hi.yb:
            errors.append(f"overlap between rect {i} and {i + 1}")
            break
        lo_in_hi = hi.xl <= lo.xl and lo.xr <= hi.xr
        hi_in_lo = lo.xl <= hi.xl and hi.xr <= lo.xr
        if not (lo_in_hi or hi_in_lo):
            errors.append(
                f"neither edge contains the other between rect {i} and {i + 1}"
            )
            break
    return ValidationReport(not errors, tuple(errors))


def validate_instance(inst: Instance) -> ValidationReport:
    errors: list[str] = []
    if inst.k < 1:
        errors.append("k must be positive")
    for idx, shape in enumerate(inst.shapes):
        report = validate_kshape(shape)
        if not report.ok:
            errors.append(f"shape {idx}: {report.errors[0]}")
        elif len(shape.rects) > inst.k:
            errors.append(f"shape {idx}: has {len(shape.rects)} rects, declared k={inst.k}")
    return ValidationReport(not errors, tuple(errors))


def is_hourglass(shape: KShape) -> bool:
    """True iff no interior rectangle is strictly wider than both neighbours.

    Stacks of one or two rectangles qualify unconditionally.
    """
    report = validate_kshape(shape)
    if not report.ok:
        raise InvalidShapeError(report.errors[0])
    widths = [r.width for r in shape.rects]
    for j in range(1, len(widths) - 1):
        if widths[j - 1] < widths[j] and widths[j + 1] < widths[j]:
            return False
    return True


def stabs_rect(seg: HSegment, r: Rect) -> bool:
    """A segment stabs a rectangle when it spans its full width at some height.

    Boundaries count: a segment at yb or yt still slices the closed rectangle
    wall to wall.
    """
    return seg.xl <= r.xl and r.xr <= seg.xr and r.yb <= seg.y <= r.yt


def stabs_kshape(seg: HSegment, shape: KShape) -> bool:
    return any(stabs_rect(seg, r) for r in shape.rects)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    unstabbed: tuple[int, ...]
    cost: Coord


def verify_solution(inst: Instance, sol: Solution) -> FeasibilityReport:
    """Recompute feasibility and cost of a solution from first principles."""
    recomputed = sum((s.length for s in sol.segments), ZERO)
    if recomputed != sol.cost:
        raise CostMismatchError("cost field inconsistent")
    unstabbed = tuple(
        idx
        for idx, shape in enumerate(inst.shapes)
        if not any(stabs_kshape(seg, shape) for seg in sol.segments)
    )
    return FeasibilityReport(not unstabbed, unstabbed, recomputed)


def bounding_rect(shape: KShape) -> Rect:
    report = validate_kshape(shape)
    if not report.ok:
        raise InvalidShapeError(report.errors[0])
    return Rect(shape.x_min, shape.x_max, shape.y_min, shape.y_max)


@dataclass(frozen=True)
class WidthStats:
    w_min: Coord
    w_max: Coord
    w_range: Coord


def width_stats(shapes: Union[Instance, Sequence[KShape]]) -> WidthStats:
    """(narrowest rect width, widest rect width, horizontal extent) of a shape set."""
    if isinstance(shapes, Instance):
        shapes = shapes.shapes
    shapes = tuple(shapes)
    if not shapes:
        raise GeometryError("width_stats of an empty shape set")
    w_min = min(s.w_min for s in shapes)
    w_max = max(s.w_max for s in shapes)
    w_range = max(s.x_max for s in shapes) - min(s.x_min for s in shapes)
    return WidthStats(w_min, w_max, w_range)


def translate_shape(shape: KShape, dx: Coord = ZERO, dy: Coord = ZERO) -> KShape:
    return KShape(
        tuple(Rect(r.xl + dx, r.xr + dx, r.yb + dy, r.yt + dy) for r in shape.rects)
    )


def scale_shape_x(shape: KShape, factor: Coord) -> KShape:
    if factor <= 0:
        raise GeometryError("scale factor must be positive")
    return KShape(
        tuple(Rect(r.xl * factor, r.xr * factor, r.yb, r.yt) for r in shape.rects)
    )
