"""Instance/solution files, random generators, and reduction constructors.

File formats are JSON with exact rationals: a coordinate is an integer, a
decimal number (parsed exactly, never through float), or a "p/q" string.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from typing import Sequence

from .geometry import (
    GeometryError,
    HSegment,
    Instance,
    KShape,
    Rect,
    Solution,
    stabs_rect,
    to_coord,
    validate_kshape,
)


class ParseError(ValueError):
    """Input text could not be parsed; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class GenerationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# serialization


def _coord_out(value: Fraction):
    if value.denominator == 1:
        return int(value)
    return f"{value.numerator}/{value.denominator}"


def _coord_in(raw, context: str) -> Fraction:
    if isinstance(raw, (int, Fraction, str)) and not isinstance(raw, bool):
        try:
            return to_coord(raw)
        except GeometryError as exc:
            raise ParseError(f"{context}: {exc}") from exc
    raise ParseError(f"{context}: expected number or rational string, got {raw!r}")


def _loads(text: str):
    try:
        return json.loads(text, parse_float=Fraction, parse_int=int)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc


def _rect_out(r: Rect) -> dict:
    return {
        "xl": _coord_out(r.xl),
        "xr": _coord_out(r.xr),
        "yb": _coord_out(r.yb),
        "yt": _coord_out(r.yt),
    }


def _rect_in(obj, context: str) -> Rect:
    if not isinstance(obj, dict):
        raise ParseError(f"{context}: expected rect object")
    try:
        return Rect(*(_coord_in(obj[k], f"{context}.{k}") for k in ("xl", "xr", "yb", "yt")))
    except KeyError as exc:
        raise ParseError(f"{context}: missing field {exc.args[0]!r}") from exc
    except GeometryError as exc:
        raise ParseError(f"{context}: {exc}") from exc


@dataclass(frozen=True)
class SquareMeta:
    """Positions of the helper squares of a reduction instance."""

    index: int
    rect: Rect


@dataclass(frozen=True)
class ReductionMeta:
    squares: tuple[SquareMeta, ...]

    @property
    def n(self) -> int:
        return len(self.squares)


def write_instance(inst: Instance, meta: ReductionMeta | None = None) -> str:
    doc: dict = {
        "k": inst.k,
        "shapes": [{"rects": [_rect_out(r) for r in s.rects]} for s in inst.shapes],
    }
    if meta is not None:
        doc["meta"] = {
            "squares": [{"index": sq.index, "rect": _rect_out(sq.rect)} for sq in meta.squares]
        }
    return json.dumps(doc, indent=2) + "\n"


def read_instance(text: str) -> tuple[Instance, ReductionMeta | None]:
    doc = _loads(text)
    if not isinstance(doc, dict) or "shapes" not in doc:
        raise ParseError("instance file must be an object with a 'shapes' list")
    shapes = []
    for idx, sobj in enumerate(doc["shapes"]):
        if not isinstance(sobj, dict) or "rects" not in sobj:
            raise ParseError(f"shape {idx}: expected object with 'rects'")
        rects = tuple(
            _rect_in(robj, f"shape {idx} rect {j}") for j, robj in enumerate(sobj["rects"])
        )
        shape = KShape(rects)
        report = validate_kshape(shape)
        if not report.ok:
            raise ParseError(f"shape {idx}: {report.errors[0]}")
        shapes.append(shape)
    k = doc.get("k", max((len(s.rects) for s in shapes), default=1))
    if not isinstance(k, int) or k < 1:
        raise ParseError("'k' must be a positive integer")
    if any(len(s.rects) > k for s in shapes):
        raise ParseError("a shape exceeds the declared k")
    meta = None
    if "meta" in doc and doc["meta"] is not None:
        mobj = doc["meta"]
        squares = tuple(
            SquareMeta(int(q["index"]), _rect_in(q["rect"], f"meta square {i}"))
            for i, q in enumerate(mobj.get("squares", ()))
        )
        meta = ReductionMeta(squares)
    return Instance(tuple(shapes), k), meta


def write_solution(sol: Solution) -> str:
    doc = {
        "segments": [
            {"xl": _coord_out(s.xl), "xr": _coord_out(s.xr), "y": _coord_out(s.y)}
            for s in sol.segments
        ],
        "cost": _coord_out(sol.cost),
    }
    return json.dumps(doc, indent=2) + "\n"


def read_solution(text: str) -> Solution:
    doc = _loads(text)
    if not isinstance(doc, dict) or "segments" not in doc:
        raise ParseError("solution file must be an object with a 'segments' list")
    segments = []
    for i, sobj in enumerate(doc["segments"]):
        try:
            segments.append(
                HSegment(
                    _coord_in(sobj["xl"], f"segment {i}.xl"),
                    _coord_in(sobj["xr"], f"segment {i}.xr"),
                    _coord_in(sobj["y"], f"segment {i}.y"),
                )
            )
        except KeyError as exc:
            raise ParseError(f"segment {i}: missing field {exc.args[0]!r}") from exc
        except GeometryError as exc:
            raise ParseError(f"segment {i}: {exc}") from exc
    cost = _coord_in(doc.get("cost", 0), "cost")
    return Solution(tuple(segments), cost)


# ---------------------------------------------------------------------------
# graphs and set systems


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for i, j in self.edges:
            if not (1 <= i < j <= self.n):
                raise ParseError(f"edge ({i},{j}) out of range for n={self.n}")
            if (i, j) in seen:
                raise ParseError(f"duplicate edge ({i},{j})")
            seen.add((i, j))


@dataclass(frozen=True)
class SetSystem:
    n: int
    sets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for idx, s in enumerate(self.sets):
            if not s:
                raise ParseError(f"set {idx} is empty")
            if list(s) != sorted(set(s)):
                raise ParseError(f"set {idx} must be sorted and duplicate-free")
            if s[0] < 1 or s[-1] > self.n:
                raise ParseError(f"set {idx} has elements out of range for n={self.n}")


def graph(n: int, edges: Sequence[tuple[int, int]]) -> Graph:
    normalized = tuple(tuple(sorted(e)) for e in edges)
    for i, j in normalized:
        if i == j:
            raise ParseError(f"self-loop at vertex {i}")
    return Graph(n, normalized)


def read_graph(text: str) -> Graph:
    doc = _loads(text)
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise ParseError("graph file must be an object with 'n' and 'edges'")
    return graph(int(doc["n"]), [tuple(e) for e in doc["edges"]])


def write_graph(g: Graph) -> str:
    return json.dumps({"n": g.n, "edges": [list(e) for e in g.edges]}, indent=2) + "\n"


def read_set_system(text: str) -> SetSystem:
    doc = _loads(text)
    if not isinstance(doc, dict) or "n" not in doc or "sets" not in doc:
        raise ParseError("set system file must be an object with 'n' and 'sets'")
    return SetSystem(int(doc["n"]), tuple(tuple(sorted(set(s))) for s in doc["sets"]))


def write_set_system(fs: SetSystem) -> str:
    return json.dumps({"n": fs.n, "sets": [list(s) for s in fs.sets]}, indent=2) + "\n"


# ---------------------------------------------------------------------------
# random generator


@dataclass(frozen=True)
class GenParams:
    seed: int
    count: int
    k: int
    coord_bounds: tuple[int, int] = (8, 8)
    width_ratio_delta: Fraction | None = None
    hourglass_only: bool = False

    def __post_init__(self):
        if self.count < 1 or self.k < 1:
            raise GenerationError("count and k must be at least 1")
        x_max, y_max = self.coord_bounds
        if x_max < 1 or y_max < self.k:
            raise GenerationError(
                f"coord bounds ({x_max},{y_max}) cannot host stacks of {self.k} rects"
            )
        if self.width_ratio_delta is not None:
            delta = self.width_ratio_delta
            if not (0 < delta <= 1):
                raise GenerationError("width_ratio_delta must lie in (0, 1]")


def _valley_order(widths: list[int]) -> list[int]:
    # wide -> narrow -> wide; no interior rect strictly wider than both
    # neighbours, so the shape passes the hourglass predicate.
    asc = sorted(widths)
    left = asc[1::2][::-1]
    right = asc[0::2]
    return left + right


def gen_random(params: GenParams) -> Instance:
    """Deterministic random instance; every emitted shape validates."""
    rng = random.Random(params.seed)
    x_max, y_max = params.coord_bounds
    shapes = []
    for _ in range(params.count):
        m = rng.randint(1, params.k)
        if params.width_ratio_delta is not None:
            w_hi = rng.randint(1, x_max)
            lo = max(1, ceil(params.width_ratio_delta * w_hi))
            widths = [rng.randint(lo, w_hi) for _ in range(m)]
        else:
            widths = [rng.randint(1, x_max) for _ in range(m)]
        if params.hourglass_only:
            widths = _valley_order(widths)
        # heights: integer stack fitting within y_max
        y0 = rng.randint(0, y_max - m)
        budget = y_max - y0
        heights = []
        for t in range(m):
            remaining = m - t - 1
            h = rng.randint(1, max(1, (budget - remaining)))
            heights.append(h)
            budget -= h
        # x placement keeping the adjacency containment chain
        rects = []
        xl = rng.randint(0, x_max - widths[0])
        y = y0
        prev = (xl, xl + widths[0])
        rects.append(Rect(*map(Fraction, (prev[0], prev[1], y, y + heights[0]))))
        y += heights[0]
        for t in range(1, m):
            w_prev = prev[1] - prev[0]
            w_cur = widths[t]
            if w_cur >= w_prev:
                lo_x = max(0, prev[1] - w_cur)
                hi_x = min(prev[0], x_max - w_cur)
            else:
                lo_x = max(0, prev[0])
                hi_x = min(prev[1] - w_cur, x_max - w_cur)
            xl = rng.randint(lo_x, hi_x)
            prev = (xl, xl + w_cur)
            rects.append(Rect(*map(Fraction, (prev[0], prev[1], y, y + heights[t]))))
            y += heights[t]
        shape = KShape(tuple(rects))
        report = validate_kshape(shape)
        if not report.ok:
            raise GenerationError(f"generator produced invalid shape: {report.errors[0]}")
        shapes.append(shape)
    return Instance(tuple(shapes), params.k)


# ---------------------------------------------------------------------------
# hardness-reduction constructors


def _unit_square(i: int) -> Rect:
    # top-left corner at (0, 2i - 1)
    return Rect(Fraction(0), Fraction(1), Fraction(2 * i - 2), Fraction(2 * i - 1))


def _connector(n: int, i: int, j: int) -> Rect:
    # wide rect bridging squares i < j
    return Rect(Fraction(0), Fraction(n + 1), Fraction(2 * i - 1), Fraction(2 * j - 2))


def vc_to_stabbing(g: Graph) -> tuple[Instance, ReductionMeta]:
    """One 3-shape per edge: square, wide bridge, square.

    The helper squares are metadata, not instance shapes.
    """
    if not g.edges:
        raise GenerationError("vertex cover reduction needs at least one edge")
    shapes = []
    for i, j in sorted(g.edges):
        shape = KShape((_unit_square(i), _connector(g.n, i, j), _unit_square(j)))
        report = validate_kshape(shape)
        assert report.ok, report.errors
        shapes.append(shape)
    meta = ReductionMeta(tuple(SquareMeta(i, _unit_square(i)) for i in range(1, g.n + 1)))
    return Instance(tuple(shapes), 3), meta


def hs_to_stabbing(fs: SetSystem) -> tuple[Instance, ReductionMeta]:
    """One alternating squares/bridges stack per family set (2f-1 rects)."""
    if not fs.sets:
        raise GenerationError("hitting set reduction needs at least one set")
    shapes = []
    for members in fs.sets:
        rects = [_unit_square(members[0])]
        for a, b in zip(members, members[1:]):
            rects.append(_connector(fs.n, a, b))
            rects.append(_unit_square(b))
        shape = KShape(tuple(rects))
        report = validate_kshape(shape)
        assert report.ok, report.errors
        shapes.append(shape)
    k = max(2 * len(s) - 1 for s in fs.sets)
    meta = ReductionMeta(tuple(SquareMeta(i, _unit_square(i)) for i in range(1, fs.n + 1)))
    return Instance(tuple(shapes), k), meta


class ExtractionError(ValueError):
    pass


def extract_cover(inst: Instance, meta: ReductionMeta, sol: Solution) -> set[int]:
    """Read a vertex cover / hitting set off a feasible stabbing solution.

    Long segments (length >= n+1, i.e. wide enough to span the bridges) are
    normalized per stabbed shape to a unit stab of a bordering square of the
    stabbed rect; shorter segments count for the unique square they span.
    """
    from .geometry import verify_solution

    report = verify_solution(inst, sol)
    if not report.feasible:
        raise ExtractionError(f"solution infeasible; unstabbed shapes {report.unstabbed}")
    n = meta.n
    square_index = {sq.rect: sq.index for sq in meta.squares}
    chosen: set[int] = set()
    for seg in sol.segments:
        if seg.length >= n + 1:
            for shape in inst.shapes:
                for r_idx, r in enumerate(shape.rects):
                    if stabs_rect(seg, r):
                        if r in square_index:
                            chosen.add(square_index[r])
                        else:
                            # wide bridge; charge its lower bordering square
                            chosen.add(square_index[shape.rects[r_idx - 1]])
                        break
        else:
            # too short for a bridge; at most one square matches its height
            for sq, idx in square_index.items():
                if stabs_rect(seg, sq):
                    chosen.add(idx)
                    break
    # the normalization must itself be a cover; check before returning
    for s_idx, shape in enumerate(inst.shapes):
        touched = {square_index[r] for r in shape.rects if r in square_index}
        if not touched & chosen:
            raise ExtractionError(f"normalization failed to cover shape {s_idx}")
    return chosen
