"""Structural decompositions: rescaling, narrow vertical strips, balanced cuts.

These are the testable transformations behind the hierarchical scheme; the
quasi-polynomial guessing recursion itself is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Sequence

from .cover import greedy_stab, harmonic, exact_solve
from .geometry import (
    Coord,
    HSegment,
    Instance,
    KShape,
    Rect,
    Solution,
    scale_shape_x,
    stabs_kshape,
    validate_instance,
    width_stats,
)

ZERO = Fraction(0)
ONE = Fraction(1)


class DecomposeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# width-bounded trimming shared by preprocess and the discretizer


def trim_wide_rects(shape: KShape, limit: Coord) -> tuple[KShape, int]:
    """Drop rects wider than `limit`, keeping a single contiguous stack.

    Over-wide rects are useless to any solution cheaper than `limit`.  When
    dropping an interior rect would disconnect the stack (possible for shapes
    with equal-width interior plateaus), the run containing the narrowest rect
    survives.
    """
    keep = [r.width <= limit for r in shape.rects]
    if all(keep):
        return shape, 0
    if not any(keep):
        raise DecomposeError("every rect exceeds the width limit")
    runs: list[tuple[int, int]] = []
    start = None
    for i, flag in enumerate(keep):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(keep)))
    narrow_at = min(
        (i for i, flag in enumerate(keep) if flag), key=lambda i: (shape.rects[i].width, i)
    )
    run = next(r for r in runs if r[0] <= narrow_at < r[1])
    kept = shape.rects[run[0] : run[1]]
    return KShape(kept), len(shape.rects) - len(kept)


# ---------------------------------------------------------------------------
# preprocessing (x-rescale + cheap pre-stabs + width capping)


@dataclass(frozen=True)
class ScaledInstance:
    instance: Instance
    scale_factor: Coord
    pre_stabbed: tuple[HSegment, ...]  # original coordinates
    discarded_parts: int
    width_cap: Coord  # post-scale upper bound on every remaining width
    narrow_bound: Coord  # post-scale strict lower bound on every remaining width


def preprocess(inst: Instance, eps: Fraction) -> ScaledInstance:
    """Rescale x so remaining widths land in (eps/n, H_n]; pre-stab the rest.

    The rational surrogate H_n bounds the greedy/optimal ratio, so scaling by
    H_n/greedy pins the scaled optimum into [1, H_n].  Shapes narrower than
    eps/n after scaling are stabbed outright (total cost <= eps) and recorded
    in original coordinates; rects wider than H_n cannot be stabbed by any
    optimal solution and are trimmed away.
    """
    if not (0 < eps < Fraction(1, 3)):
        raise DecomposeError("eps must lie in (0, 1/3)")
    if inst.n == 0:
        raise DecomposeError("empty instance")
    report = validate_instance(inst)
    if not report.ok:
        raise DecomposeError(f"invalid instance: {report.errors[0]}")
    n = inst.n
    gamma = greedy_stab(inst).cost
    cap = harmonic(n)
    if gamma == 0:
        # every shape has a zero-width rect: stab each for free
        pre = []
        for shape in inst.shapes:
            r = min(shape.rects, key=lambda r: (r.width, r.yb))
            pre.append(HSegment(r.xl, r.xr, r.yb))
        return ScaledInstance(Instance((), inst.k), ONE, tuple(pre), 0, cap, ZERO)
    beta = cap / gamma
    narrow = eps / n
    residual: list[KShape] = []
    pre: list[HSegment] = []
    discarded = 0
    for shape in inst.shapes:
        scaled = scale_shape_x(shape, beta)
        if scaled.w_min <= narrow:
            r = min(scaled.rects, key=lambda r: (r.width, r.yb))
            pre.append(HSegment(r.xl / beta, r.xr / beta, r.yb))
            continue
        trimmed, dropped = trim_wide_rects(scaled, cap)
        discarded += dropped
        residual.append(trimmed)
    for shape in residual:
        assert narrow < shape.w_min and shape.w_max <= cap
    return ScaledInstance(
        Instance(tuple(residual), inst.k), beta, tuple(pre), discarded, cap, narrow
    )


def unscale_solution(scaled: ScaledInstance, sol: Solution) -> Solution:
    """Map a solution of the scaled residual back to the original instance."""
    beta = scaled.scale_factor
    segs = [HSegment(s.xl / beta, s.xr / beta, s.y) for s in sol.segments]
    segs.extend(scaled.pre_stabbed)
    return Solution.of_segments(segs)


# ---------------------------------------------------------------------------
# vertical strips with offset search


@dataclass(frozen=True)
class Strip:
    x_lo: Coord
    x_hi: Coord
    shapes: tuple[int, ...]


@dataclass(frozen=True)
class StripPartition:
    mu: Coord
    offset: Coord
    spacing: Coord
    strips: tuple[Strip, ...]
    rest: tuple[int, ...]


def _strip_precheck(inst: Instance, mu: Fraction) -> Coord:
    if mu <= 0:
        raise DecomposeError("mu must be positive")
    if inst.n == 0:
        raise DecomposeError("empty instance")
    stats = width_stats(inst)
    if not mu / inst.n < stats.w_min:
        raise DecomposeError(f"need mu/n < w_min, got {mu}/{inst.n} vs {stats.w_min}")
    return stats.w_max


def strip_partition(inst: Instance, mu: Fraction, z: Coord) -> StripPartition:
    """Grid lines at z + i*(w_max/mu); shapes crossed by a line go to `rest`."""
    w_max = _strip_precheck(inst, mu)
    spacing = w_max / mu
    rest: list[int] = []
    buckets: dict[int, list[int]] = {}
    for idx, shape in enumerate(inst.shapes):
        lo, hi = shape.x_min, shape.x_max
        t = floor((lo - z) / spacing) + 1  # first line strictly right of lo
        if z + t * spacing < hi:
            rest.append(idx)
            continue
        t0 = floor((lo - z) / spacing)
        assert hi <= z + (t0 + 1) * spacing
        buckets.setdefault(t0, []).append(idx)
    strips = tuple(
        Strip(z + t * spacing, z + (t + 1) * spacing, tuple(buckets[t]))
        for t in sorted(buckets)
    )
    return StripPartition(mu, z, spacing, strips, tuple(rest))


def offset_grid(inst: Instance, mu: Fraction) -> list[Coord]:
    """Offsets {i*mu/n} in [0, w_max/mu); the sweep domain of the shift search."""
    w_max = _strip_precheck(inst, mu)
    step = mu / inst.n
    limit = w_max / mu
    if limit <= step:
        raise DecomposeError("offset grid empty: w_max/mu <= mu/n")
    zs = []
    t = 0
    while t * step < limit:
        zs.append(t * step)
        t += 1
    return zs


@dataclass(frozen=True)
class BestOffset:
    offset: Coord
    partition: StripPartition
    rest_cost: Coord


def best_offset(inst: Instance, mu: Fraction, exact: bool | None = None) -> BestOffset:
    """Sweep the offset grid, minimizing the cost of stabbing the crossed shapes."""
    if exact is None:
        exact = inst.n <= 7
    cache: dict[frozenset[int], Coord] = {}

    def rest_cost(indices: Sequence[int]) -> Coord:
        key = frozenset(indices)
        if key in cache:
            return cache[key]
        if not indices:
            cost = ZERO
        else:
            sub = Instance(tuple(inst.shapes[i] for i in sorted(key)), inst.k)
            cost = exact_solve(sub).solution.cost if exact else greedy_stab(sub).cost
        cache[key] = cost
        return cost

    best: tuple[Coord, Coord] | None = None  # (cost, z)
    best_partition = None
    for z in offset_grid(inst, mu):
        part = strip_partition(inst, mu, z)
        cost = rest_cost(part.rest)
        key = (cost, z)
        if best is None or key < best:
            best = key
            best_partition = part
    assert best is not None and best_partition is not None
    return BestOffset(best[1], best_partition, best[0])


# ---------------------------------------------------------------------------
# balanced horizontal cuts


@dataclass(frozen=True)
class CutResult:
    h: Coord
    cut_segment: HSegment
    below: tuple[int, ...]
    above: tuple[int, ...]
    straddlers: tuple[int, ...]
    below_cost: Coord
    above_cost: Coord


def balanced_cut(
    shapes: Sequence[KShape],
    x_interval: tuple[Coord, Coord],
    reference: Solution,
    threshold: Coord,
) -> CutResult | None:
    """Cut the strip at the height where cumulative reference cost passes half.

    Returns None when the reference cost is within the threshold (no cut
    needed).  Reference segments must sit at distinct heights and be no wider
    than the strip; then both sides keep reference cost >= total/2 - width.
    """
    lo, hi = x_interval
    strip_width = hi - lo
    for idx, shape in enumerate(shapes):
        if shape.x_min < lo or shape.x_max > hi:
            raise DecomposeError(f"shape {idx} is not inside the strip")
        if not any(stabs_kshape(s, shape) for s in reference.segments):
            raise DecomposeError(f"reference does not stab shape {idx}")
    segs = sorted(reference.segments, key=lambda s: s.y)
    for a, b in zip(segs, segs[1:]):
        if a.y == b.y:
            raise DecomposeError("reference segments must sit at distinct heights")
    for s in segs:
        if s.length > strip_width:
            raise DecomposeError("reference segment wider than the strip")
    total = reference.cost
    if total <= threshold:
        return None
    half = total / 2
    running = ZERO
    h = None
    for s in segs:
        running += s.length
        if running >= half:
            h = s.y
            break
    assert h is not None
    below_cost = sum((s.length for s in segs if s.y <= h), ZERO)
    above_cost = total - below_cost
    below = tuple(i for i, sh in enumerate(shapes) if sh.y_max < h)
    above = tuple(i for i, sh in enumerate(shapes) if sh.y_min > h)
    straddlers = tuple(
        i for i, sh in enumerate(shapes) if sh.y_min <= h <= sh.y_max
    )
    return CutResult(
        h, HSegment(lo, hi, h), below, above, straddlers, below_cost, above_cost
    )


@dataclass(frozen=True)
class LeafPiece:
    shapes: tuple[int, ...]
    retained_cost: Coord


@dataclass(frozen=True)
class RecursiveCuts:
    cuts: tuple[HSegment, ...]
    details: tuple[CutResult, ...]
    leaves: tuple[LeafPiece, ...]
    live_cost: Coord  # reference cost actually stabbing something at the root

    @property
    def cut_cost(self) -> Coord:
        return sum((c.length for c in self.cuts), ZERO)


def recursive_cuts(
    shapes: Sequence[KShape],
    x_interval: tuple[Coord, Coord],
    reference: Solution,
    threshold: Coord,
) -> RecursiveCuts:
    """Cut until every piece retains reference cost <= threshold.

    Dead reference segments (stabbing nothing in a piece) are dropped on
    entry, mirroring the fact that an optimal per-piece solution has no idle
    segments; each applied cut removes at least one straddling shape, so the
    recursion terminates.
    """
    shapes = tuple(shapes)
    cuts: list[HSegment] = []
    details: list[CutResult] = []
    leaves: list[LeafPiece] = []

    def live(indices: tuple[int, ...], segs: tuple[HSegment, ...]) -> tuple[HSegment, ...]:
        return tuple(
            s for s in segs if any(stabs_kshape(s, shapes[i]) for i in indices)
        )

    root_live = live(tuple(range(len(shapes))), tuple(reference.segments))
    root_cost = sum((s.length for s in root_live), ZERO)

    def recurse(indices: tuple[int, ...], segs: tuple[HSegment, ...]) -> None:
        segs = live(indices, segs)
        cost = sum((s.length for s in segs), ZERO)
        if not indices or cost <= threshold:
            leaves.append(LeafPiece(indices, cost))
            return
        local = [shapes[i] for i in indices]
        cut = balanced_cut(local, x_interval, Solution.of_segments(segs), threshold)
        assert cut is not None
        cuts.append(cut.cut_segment)
        details.append(cut)
        below = tuple(indices[i] for i in cut.below)
        above = tuple(indices[i] for i in cut.above)
        recurse(below, tuple(s for s in segs if s.y <= cut.h))
        recurse(above, tuple(s for s in segs if s.y > cut.h))

    recurse(tuple(range(len(shapes))), tuple(reference.segments))
    return RecursiveCuts(tuple(cuts), tuple(details), tuple(leaves), root_cost)


# ---------------------------------------------------------------------------
# y-compression shared with the discretizer


def compress_y(inst: Instance) -> tuple[Instance, tuple[Coord, ...]]:
    """Squash the distinct y-levels onto consecutive integers 0, 1, 2, ...

    Horizontal stabbing only cares about the vertical order of boundaries, so
    this is feasibility-preserving in both directions; the returned level
    table maps compressed integer heights back to original coordinates.
    """
    levels = sorted({c for s in inst.shapes for r in s.rects for c in (r.yb, r.yt)})
    index = {y: Fraction(i) for i, y in enumerate(levels)}
    shapes = tuple(
        KShape(tuple(Rect(r.xl, r.xr, index[r.yb], index[r.yt]) for r in s.rects))
        for s in inst.shapes
    )
    return Instance(shapes, inst.k), tuple(levels)
