"""Discretized dynamic program over rectangular cells with bounded live segments.

The instance is rescaled and snapped so x-coordinates are integer multiples of
eps^d and y-coordinates consecutive integers; the DP then recurses on cells
(discrete rectangle, set of live segments) through three operations: trivial
(split along a live segment spanning the cell), add (grow the live set from
the candidate pool), and line (stab everything crossing a vertical line via
bounding boxes, then split).  Enumeration is capped for desk scale; the
returned cost is still never below the exact optimum because every candidate
route is feasible, and it matches the optimum whenever the pool contains an
optimal solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor
from .cover import candidate_segments, greedy_stab, harmonic
from .decompose import compress_y, trim_wide_rects
from .geometry import (
    Coord,
    HSegment,
    Instance,
    KShape,
    Rect,
    Solution,
    scale_shape_x,
    validate_instance,
)
from .lp_approx import RectStabber, rect_stab

ZERO = Fraction(0)
ONE = Fraction(1)


class PtasError(ValueError):
    pass


def derive_d(eps: Fraction, n: int) -> int:
    """The unique d with eps^3/n < eps^d <= eps^2/n."""
    if not (0 < eps < 1):
        raise PtasError("eps must lie in (0, 1)")
    if n < 1:
        raise PtasError("n must be positive")
    d = 0
    while eps**d > eps**2 / n:
        d += 1
    assert eps**3 / n < eps**d <= eps**2 / n
    return d


@dataclass(frozen=True)
class PtasParams:
    """Knobs of the discretized DP.

    The theory wants eps < 1/3; desk-scale runs use eps = 1/2, which the DP
    accepts as long as 1/eps stays integral so grid levels nest.
    """

    eps: Fraction
    alpha: int
    n: int
    add_cap: int | None = None
    offset: Fraction = ZERO

    def __post_init__(self):
        if not (0 < self.eps < 1):
            raise PtasError("eps must lie in (0, 1)")
        inv = 1 / self.eps
        if inv.denominator != 1:
            raise PtasError("1/eps must be an integer so grid levels nest")
        if self.alpha < 1:
            raise PtasError("alpha must be a positive integer")
        if self.add_cap is not None and self.add_cap < 1:
            raise PtasError("add_cap must be at least 1")
        step = self.eps**self.d
        if self.offset < 0 or self.offset > self.alpha / self.eps**2:
            raise PtasError("offset must lie in [0, alpha/eps^2]")
        if (self.offset / step).denominator != 1:
            raise PtasError("offset must be an integral multiple of eps^d")

    @property
    def d(self) -> int:
        return derive_d(self.eps, self.n)

    @property
    def step(self) -> Fraction:
        return self.eps**self.d

    @property
    def live_cap(self) -> int:
        return int(3 * (1 / self.eps) ** 3)

    @property
    def per_op_cap(self) -> int:
        return self.add_cap if self.add_cap is not None else self.live_cap


def level_of(length: Coord, alpha: int, eps: Fraction) -> int:
    """Level j of a segment: length in (alpha*eps^j, alpha*eps^(j-1)]."""
    if length <= 0:
        raise PtasError("zero-length segment has no level")
    if length > alpha / eps:
        raise PtasError(f"length {length} exceeds the level-0 ceiling {alpha / eps}")
    j = 0
    while length <= alpha * eps**j:
        j += 1
    assert alpha * eps**j < length <= alpha * eps ** (j - 1)
    return j


# ---------------------------------------------------------------------------
# discretization


@dataclass(frozen=True)
class Cluster:
    packed_lo: Coord
    packed_hi: Coord
    shift: Coord  # packed_x - scaled_x


@dataclass(frozen=True)
class DiscreteInstance:
    instance: Instance
    eps: Fraction
    alpha: int
    d: int
    beta: Coord
    pre_stabbed: tuple[HSegment, ...]  # original coordinates
    y_levels: tuple[Coord, ...]
    clusters: tuple[Cluster, ...]
    discarded_parts: int

    @property
    def step(self) -> Fraction:
        return self.eps**self.d

    @property
    def bbox(self) -> tuple[Coord, Coord, Coord, Coord]:
        n = max(self.instance.n, 1)
        return (ZERO, Fraction(self.alpha * n), ZERO, Fraction((self.instance.k + 1) * n))


def _snap_out(r: Rect, step: Fraction) -> Rect:
    xl = floor(r.xl / step) * step
    xr = ceil(r.xr / step) * step
    return Rect(xl, xr, r.yb, r.yt)


def discretize(inst: Instance, eps: Fraction, alpha: int | None = None) -> DiscreteInstance:
    """Scale, pre-stab narrow shapes, snap x to the eps^d grid, compress y.

    Produces an instance whose widths lie in (alpha*eps/n, alpha], with every
    defining point discrete, inside [0, alpha*n] x [0, (k+1)n].  Any feasible
    solution of the result maps back (map_back) to a feasible solution of the
    original instance.
    """
    if not (0 < eps < Fraction(1, 3)):
        raise PtasError("discretize requires 0 < eps < 1/3")
    if (1 / eps).denominator != 1:
        raise PtasError("1/eps must be an integer")
    report = validate_instance(inst)
    if not report.ok:
        raise PtasError(f"invalid instance: {report.errors[0]}")
    if inst.n == 0:
        raise PtasError("empty instance")
    n = inst.n
    h_n = harmonic(n)
    if alpha is None:
        alpha = max(1, ceil(h_n))
    if alpha < h_n:
        raise PtasError(f"alpha={alpha} is below the greedy guarantee H_n={h_n}")
    d = derive_d(eps, n)
    step = eps**d
    ready = _already_discrete(inst, eps, alpha, d)
    if ready is not None:
        return ready
    approx_cost = greedy_stab(inst).cost
    if approx_cost == 0:
        pre = []
        for shape in inst.shapes:
            r = min(shape.rects, key=lambda r: (r.width, r.yb))
            pre.append(HSegment(r.xl, r.xr, r.yb))
        return DiscreteInstance(
            Instance((), inst.k), eps, alpha, d, ONE, tuple(pre), (), (), 0
        )
    beta = (1 - 2 * eps) * Fraction(alpha) / approx_cost
    narrow = alpha * eps / Fraction(n)

    scaled: list[KShape] = []
    pre: list[HSegment] = []
    discarded = 0
    for shape in inst.shapes:
        s = scale_shape_x(shape, beta)
        if s.w_min <= narrow:
            r = min(s.rects, key=lambda r: (r.width, r.yb))
            pre.append(HSegment(r.xl / beta, r.xr / beta, r.yb))
            continue
        snapped = KShape(tuple(_snap_out(r, step) for r in s.rects))
        trimmed, dropped = trim_wide_rects(snapped, Fraction(alpha))
        discarded += dropped
        scaled.append(trimmed)

    if not scaled:
        return DiscreteInstance(
            Instance((), inst.k), eps, alpha, d, beta, tuple(pre), (), (), 0
        )

    # group x-overlapping shapes; gaps > alpha are squeezed to exactly alpha,
    # which no solution cheaper than alpha would cross anyway
    order = sorted(range(len(scaled)), key=lambda i: (scaled[i].x_min, i))
    clusters: list[list[int]] = [[order[0]]]
    reach = scaled[order[0]].x_max
    for i in order[1:]:
        if scaled[i].x_min - reach > alpha:
            clusters.append([i])
        else:
            clusters[-1].append(i)
        reach = max(reach, scaled[i].x_max)

    packed: dict[int, KShape] = {}
    cluster_info: list[Cluster] = []
    cursor = ZERO
    for group in clusters:
        lo = min(scaled[i].x_min for i in group)
        hi = max(scaled[i].x_max for i in group)
        shift = cursor - lo
        for i in group:
            packed[i] = KShape(
                tuple(Rect(r.xl + shift, r.xr + shift, r.yb, r.yt) for r in scaled[i].rects)
            )
        cluster_info.append(Cluster(cursor, hi + shift, shift))
        cursor = hi + shift + alpha
    packed_shapes = tuple(packed[i] for i in range(len(scaled)))
    w_range = max(s.x_max for s in packed_shapes)
    if w_range > alpha * len(packed_shapes):
        raise PtasError(
            f"instance too spread out after packing: range {w_range} > alpha*n"
        )

    compressed, levels = compress_y(Instance(packed_shapes, inst.k))
    if len(levels) > (inst.k + 1) * len(packed_shapes):
        raise PtasError("more distinct y-levels than (k+1)n; cannot happen")

    dinst = DiscreteInstance(
        compressed, eps, alpha, d, beta, tuple(pre), tuple(levels), tuple(cluster_info), discarded
    )
    _check_discrete_properties(dinst)
    return dinst


def _already_discrete(
    inst: Instance, eps: Fraction, alpha: int, d: int
) -> DiscreteInstance | None:
    """Fast path: an instance already meeting the width/grid/box properties
    needs only its y-levels squashed."""
    step = eps**d
    n = inst.n
    narrow = alpha * eps / Fraction(n)
    for shape in inst.shapes:
        if not (narrow < shape.w_min and shape.w_max <= alpha):
            return None
        for r in shape.rects:
            if (r.xl / step).denominator != 1 or (r.xr / step).denominator != 1:
                return None
            if r.yb.denominator != 1 or r.yt.denominator != 1:
                return None
            if not (0 <= r.xl and r.xr <= alpha * n):
                return None
            # y-range needs no check: compression squashes the levels into
            # [0, (k+1)n] regardless
    compressed, levels = compress_y(inst)
    dinst = DiscreteInstance(
        compressed,
        eps,
        alpha,
        d,
        ONE,
        (),
        tuple(levels),
        (Cluster(ZERO, Fraction(alpha * n), ZERO),),
        0,
    )
    _check_discrete_properties(dinst)
    return dinst


def _check_discrete_properties(dinst: DiscreteInstance) -> None:
    step = dinst.step
    xmax, ymax = dinst.bbox[1], dinst.bbox[3]
    n = dinst.instance.n
    for shape in dinst.instance.shapes:
        narrow = dinst.alpha * dinst.eps / Fraction(max(n, 1))
        if not (narrow < shape.w_min and shape.w_max <= dinst.alpha):
            raise PtasError("width bounds violated after discretization")
        for r in shape.rects:
            for x in (r.xl, r.xr):
                if (x / step).denominator != 1:
                    raise PtasError("non-discrete x coordinate")
                if not (0 <= x <= xmax):
                    raise PtasError("x outside the bounding box")
            for y in (r.yb, r.yt):
                if y.denominator != 1:
                    raise PtasError("non-integral y coordinate")
                if not (0 <= y <= ymax):
                    raise PtasError("y outside the bounding box")


def map_back(dinst: DiscreteInstance, sol: Solution) -> Solution:
    """Translate a feasible discrete solution back to original coordinates."""
    segs: list[HSegment] = []
    for s in sol.segments:
        if s.y.denominator != 1 or not (0 <= int(s.y) < max(len(dinst.y_levels), 1)):
            raise PtasError(f"segment height {s.y} is not a discrete level")
        y = dinst.y_levels[int(s.y)]
        for c in dinst.clusters:
            lo = max(s.xl, c.packed_lo)
            hi = min(s.xr, c.packed_hi)
            if lo < hi:
                segs.append(HSegment((lo - c.shift) / dinst.beta, (hi - c.shift) / dinst.beta, y))
    segs.extend(dinst.pre_stabbed)
    return Solution.of_segments(segs)


# ---------------------------------------------------------------------------
# long-segment splitting and well-alignment


def split_long_segments(
    sol: Solution, alpha: int, eps: Fraction, inst: Instance
) -> Solution:
    """Break segments longer than alpha/eps into bounded pieces, re-extended
    so every shape the original stabbed stays stabbed."""
    if not (0 < eps < Fraction(1, 2)):
        raise PtasError("splitting needs eps < 1/2 so pieces have positive length")
    if any(s.w_max > alpha for s in inst.shapes):
        raise PtasError("instance has rects wider than alpha")
    limit = Fraction(alpha) / eps
    piece_len = limit - 2 * alpha
    out: list[HSegment] = []
    for seg in sol.segments:
        if seg.length <= limit:
            out.append(seg)
            continue
        cursor = seg.xl
        while cursor < seg.xr:
            end = min(cursor + piece_len, seg.xr)
            lo, hi = cursor, end
            for shape in inst.shapes:
                for r in shape.rects:
                    if r.yb <= seg.y <= r.yt and cursor <= r.xr and r.xl <= end:
                        lo = min(lo, r.xl)
                        hi = max(hi, r.xr)
            assert cursor - lo <= alpha and hi - end <= alpha
            out.append(HSegment(lo, hi, seg.y))
            cursor = end
    return Solution.of_segments(out)


def well_align(seg: HSegment, params: PtasParams) -> HSegment:
    """Extend a segment outward onto the level-(j+3) grid of its level j."""
    if seg.y.denominator != 1:
        raise PtasError("segment height must already be discrete")
    j = level_of(seg.length, params.alpha, params.eps)
    if j >= params.d:
        raise PtasError(f"level {j} outside the usable range 0..{params.d - 1}")
    g = params.alpha * params.eps ** (j + 1)
    r = params.offset
    xl = r + floor((seg.xl - r) / g) * g
    xr = r + ceil((seg.xr - r) / g) * g
    out = HSegment(xl, xr, seg.y)
    assert out.length <= (1 + 2 * params.eps) * seg.length
    return out


# ---------------------------------------------------------------------------
# the dynamic program


@dataclass
class DpStats:
    cells: int = 0
    ops: int = 0
    line_ops: int = 0
    trivial_ops: int = 0
    add_ops: int = 0


@dataclass(frozen=True)
class DpResult:
    solution: Solution
    stats: DpStats
    optimal: bool
    cost: Coord


class _BudgetExceeded(Exception):
    pass


_Seg = tuple[int, int, int]  # (x-units left, x-units right, y)
_Cell = tuple[int, int, int, int]


def dp_solve(
    dinst: DiscreteInstance,
    params: PtasParams,
    stabber: RectStabber | None = None,
    line_level_cap: int = 3,
    op_budget: int = 200_000,
) -> DpResult:
    """Memoized min over trivial/add/line operations, rooted at the full box.

    Adds draw singletons from the deduplicated candidate pool that stab the
    lowest-index unstabbed shape; chained singletons reach every multi-segment
    add below the live-set cap, so the minimum is unaffected.  When the budget
    runs out the greedy solution is returned, flagged non-optimal.
    """
    inst = dinst.instance
    if inst.n == 0:
        return DpResult(Solution((), ZERO), DpStats(), True, ZERO)
    if stabber is None:
        stabber = RectStabber("exact")
    step = dinst.step
    eps = params.eps
    inv = int(1 / eps)
    live_cap = params.live_cap

    def units(x: Coord) -> int:
        q = x / step
        if q.denominator != 1:
            raise PtasError(f"coordinate {x} is not on the eps^d grid")
        return int(q)

    shapes_u = []
    for shape in inst.shapes:
        rects = tuple(
            (units(r.xl), units(r.xr), int(r.yb), int(r.yt)) for r in shape.rects
        )
        bbox = (
            min(r[0] for r in rects),
            max(r[1] for r in rects),
            rects[0][2],
            rects[-1][3],
        )
        shapes_u.append((bbox, rects))

    pool_raw = candidate_segments(inst)
    pool: list[_Seg] = sorted(
        (units(s.xl), units(s.xr), int(s.y)) for s in pool_raw.segments
    )
    pool_stabs: dict[_Seg, frozenset[int]] = {}
    for seg, stab in zip(pool_raw.segments, pool_raw.stab_sets):
        pool_stabs[(units(seg.xl), units(seg.xr), int(seg.y))] = stab

    xmax_u = units(dinst.bbox[1])
    root: _Cell = (0, xmax_u, 0, int(dinst.bbox[3]))
    for i, (bbox, _) in enumerate(shapes_u):
        if not (0 <= bbox[0] and bbox[1] <= root[1] and 0 <= bbox[2] and bbox[3] <= root[3]):
            raise PtasError(f"shape {i} lies outside the root cell {root}")

    # vertical grid lines per level, in units
    grid_spacing: dict[int, int] = {}
    for j in range(0, min(params.d + 2, line_level_cap) + 1):
        span = params.alpha * eps ** (j - 2) / step
        if span.denominator == 1:
            grid_spacing[j] = int(span)
    offset_u = units(params.offset)

    def seg_stabs_shape(seg: _Seg, idx: int) -> bool:
        a, b, y = seg
        return any(
            a <= rxl and rxr <= b and ryb <= y <= ryt
            for rxl, rxr, ryb, ryt in shapes_u[idx][1]
        )

    def contained(cell: _Cell) -> tuple[int, ...]:
        xl, xr, yb, yt = cell
        return tuple(
            i
            for i, (bbox, _) in enumerate(shapes_u)
            if xl <= bbox[0] and bbox[1] <= xr and yb <= bbox[2] and bbox[3] <= yt
        )

    def clip_live(live: frozenset[_Seg], cell: _Cell) -> frozenset[_Seg]:
        xl, xr, yb, yt = cell
        out = set()
        for a, b, y in live:
            if yb <= y <= yt:
                lo, hi = max(a, xl), min(b, xr)
                if lo < hi:
                    out.add((lo, hi, y))
        return frozenset(out)

    stats = DpStats()
    budget = [op_budget]
    memo: dict[tuple[_Cell, frozenset[_Seg]], tuple[int, frozenset[_Seg]] | None] = {}
    line_cache: dict[frozenset[int], tuple[int, frozenset[_Seg]]] = {}

    def line_stab(indices: frozenset[int]) -> tuple[int, frozenset[_Seg]]:
        hit = line_cache.get(indices)
        if hit is not None:
            return hit
        rects = [
            Rect(
                Fraction(shapes_u[i][0][0]) * step,
                Fraction(shapes_u[i][0][1]) * step,
                Fraction(shapes_u[i][0][2]),
                Fraction(shapes_u[i][0][3]),
            )
            for i in sorted(indices)
        ]
        res = rect_stab(rects, stabber)
        segs = frozenset(
            (units(s.xl), units(s.xr), int(s.y)) for s in res.solution.segments
        )
        cost = sum(b - a for a, b, _ in segs)
        out = (cost, segs)
        line_cache[indices] = out
        return out

    def vertical_lines(cell: _Cell, inside: tuple[int, ...]) -> list[int]:
        xl, xr, _, _ = cell
        lines: set[int] = set()
        for i in inside:
            bbox = shapes_u[i][0]
            for v in (bbox[0], bbox[1]):
                if xl < v < xr:
                    lines.add(v)
        for spacing in grid_spacing.values():
            if spacing <= 0:
                continue
            t = (xl - offset_u) // spacing + 1
            v = offset_u + t * spacing
            while v < xr:
                if v > xl:
                    lines.add(v)
                v += spacing
        return sorted(lines)

    def solve(cell: _Cell, live: frozenset[_Seg]) -> tuple[int, frozenset[_Seg]] | None:
        key = (cell, live)
        if key in memo:
            return memo[key]
        if budget[0] <= 0:
            raise _BudgetExceeded
        budget[0] -= 1
        stats.cells += 1
        inside = contained(cell)
        unstabbed = [
            i for i in inside if not any(seg_stabs_shape(s, i) for s in live)
        ]
        if not unstabbed:
            memo[key] = (0, frozenset())
            return memo[key]
        xl, xr, yb, yt = cell
        # trivial: a live segment spanning the cell interior splits it; the
        # segment stays on the children's shared edge so shapes touching the
        # cut remain visibly stabbed
        spanning = sorted(
            s for s in live if s[0] <= xl and s[1] >= xr and yb < s[2] < yt
        )
        if spanning:
            stats.ops += 1
            stats.trivial_ops += 1
            h = spanning[0][2]
            lower, upper = (xl, xr, yb, h), (xl, xr, h, yt)
            res_l = solve(lower, clip_live(live, lower))
            res_u = solve(upper, clip_live(live, upper))
            out = None
            if res_l is not None and res_u is not None:
                out = (res_l[0] + res_u[0], res_l[1] | res_u[1])
            memo[key] = out
            return out
        best: tuple[int, tuple[_Seg, ...], frozenset[_Seg]] | None = None
        # add operations: singletons over the lowest unstabbed shape
        if len(live) < live_cap:
            target = unstabbed[0]
            for seg in pool:
                if seg in live or seg not in pool_stabs:
                    continue
                a, b, y = seg
                if not (xl <= a and b <= xr and yb <= y <= yt):
                    continue
                if target not in pool_stabs[seg]:
                    continue
                stats.ops += 1
                stats.add_ops += 1
                sub = solve(cell, live | {seg})
                if sub is None:
                    continue
                cost = (b - a) + sub[0]
                segs = frozenset({seg}) | sub[1]
                cand = (cost, tuple(sorted(segs)), segs)
                if best is None or cand[:2] < best[:2]:
                    best = cand
        # line operations
        for v in vertical_lines(cell, inside):
            crossed = frozenset(
                i for i in inside if shapes_u[i][0][0] <= v <= shapes_u[i][0][1]
            )
            stats.ops += 1
            stats.line_ops += 1
            stab_cost, stab_segs = line_stab(crossed) if crossed else (0, frozenset())
            left, right = (xl, v, yb, yt), (v, xr, yb, yt)
            res_l = solve(left, clip_live(live, left))
            res_r = solve(right, clip_live(live, right))
            if res_l is None or res_r is None:
                continue
            cost = stab_cost + res_l[0] + res_r[0]
            segs = stab_segs | res_l[1] | res_r[1]
            cand = (cost, tuple(sorted(segs)), segs)
            if best is None or cand[:2] < best[:2]:
                best = cand
        out = None if best is None else (best[0], best[2])
        memo[key] = out
        return out

    try:
        result = solve(root, frozenset())
    except _BudgetExceeded:
        fallback = greedy_stab(inst)
        return DpResult(fallback, stats, False, fallback.cost)
    if result is None:
        raise PtasError("no feasible operation sequence within the configured caps")
    cost_u, segs = result
    solution = Solution.of_segments(
        HSegment(Fraction(a) * step, Fraction(b) * step, Fraction(y)) for a, b, y in segs
    )
    assert solution.cost == Fraction(cost_u) * step
    return DpResult(solution, stats, True, solution.cost)


# ---------------------------------------------------------------------------
# operation-schedule audit


@dataclass(frozen=True)
class AuditReport:
    ok: bool
    violations: tuple[str, ...]
    levels: int
    max_live: int


@dataclass(frozen=True)
class _AuditCell:
    xl: int
    xr: int
    yb: int
    yt: int
    live: tuple[tuple[int, int, int, int], ...]  # (xl, xr, y, level tag)


def op_sequence_audit(
    dinst: DiscreteInstance,
    params: PtasParams,
    reference: Solution,
    skip_line_levels: frozenset[int] = frozenset(),
) -> AuditReport:
    """Replay the level-ordered schedule and check every cell stays valid.

    Per level j: line operations on level-j grid lines, trivial operations,
    strip-splitting adds every (1/eps)^3 reference segments, then adds of the
    level-j reference segments.  Violations collected: a cell holding more
    than 3*(1/eps)^3 live segments, or a stale segment of level <= j-3 still
    alive at a level-j add.  `skip_line_levels` deliberately corrupts the
    schedule for negative tests.
    """
    from .geometry import verify_solution

    inst = dinst.instance
    feas = verify_solution(inst, reference)
    if not feas.feasible:
        raise PtasError(f"reference infeasible; unstabbed {feas.unstabbed}")
    step = dinst.step
    eps = params.eps
    inv = int(1 / eps)
    cap = params.live_cap
    q = inv**3

    def units(x: Coord) -> int:
        v = x / step
        if v.denominator != 1:
            raise PtasError(f"coordinate {x} is not on the eps^d grid")
        return int(v)

    offset_u = units(params.offset)
    ref_by_level: dict[int, list[tuple[int, int, int]]] = {}
    for seg in reference.segments:
        if seg.length == 0:
            continue
        j = level_of(seg.length, params.alpha, params.eps)
        if j >= params.d:
            raise PtasError(f"reference segment of level {j} outside 0..{params.d - 1}")
        g = units(params.alpha * eps ** (j + 1))
        a, b = units(seg.xl), units(seg.xr)
        if (a - offset_u) % g or (b - offset_u) % g or seg.y.denominator != 1:
            raise PtasError("reference segment is not well-aligned")
        ref_by_level.setdefault(j, []).append((a, b, int(seg.y)))

    xmax_u = units(dinst.bbox[1])
    cells: list[_AuditCell] = [_AuditCell(0, xmax_u, 0, int(dinst.bbox[3]), ())]
    violations: list[str] = []
    max_live = 0

    def check_bounds(stage: str) -> None:
        nonlocal max_live
        for c in cells:
            max_live = max(max_live, len(c.live))
            if len(c.live) > cap:
                violations.append(
                    f"{stage}: cell [{c.xl},{c.xr}]x[{c.yb},{c.yt}] holds {len(c.live)} > {cap} live segments"
                )

    def split_vertical(v: int) -> None:
        nonlocal cells
        out = []
        for c in cells:
            if c.xl < v < c.xr:
                for nxl, nxr in ((c.xl, v), (v, c.xr)):
                    live = tuple(
                        (max(a, nxl), min(b, nxr), y, tag)
                        for a, b, y, tag in c.live
                        if max(a, nxl) < min(b, nxr)
                    )
                    out.append(_AuditCell(nxl, nxr, c.yb, c.yt, live))
            else:
                out.append(c)
        cells = out

    def run_trivial() -> None:
        nonlocal cells
        changed = True
        while changed:
            changed = False
            out = []
            for c in cells:
                cut = next(
                    (
                        s
                        for s in sorted(c.live, key=lambda s: (s[2], s[0], s[1]))
                        if s[0] <= c.xl and s[1] >= c.xr and c.yb < s[2] < c.yt
                    ),
                    None,
                )
                if cut is None:
                    out.append(c)
                    continue
                changed = True
                h = cut[2]
                rest = tuple(s for s in c.live if s != cut)
                for nyb, nyt in ((c.yb, h), (h, c.yt)):
                    live = tuple(s for s in rest if nyb <= s[2] <= nyt)
                    out.append(_AuditCell(c.xl, c.xr, nyb, nyt, live))
            cells = out

    for j in range(params.d):
        if j not in skip_line_levels:
            spacing = params.alpha * eps ** (j - 2) / step
            if spacing.denominator == 1:
                sp = int(spacing)
                t = (0 - offset_u) // sp
                v = offset_u + t * sp
                while v <= xmax_u:
                    if 0 < v < xmax_u:
                        split_vertical(v)
                    v += sp
            check_bounds(f"level {j} line ops")
        if j >= 1:
            run_trivial()
            check_bounds(f"level {j} trivial ops")
        level_segs = sorted(ref_by_level.get(j, []), key=lambda s: (s[2], s[0], s[1]))
        # strip-splitting adds: every q-th level-j segment per cell spawns a
        # cell-wide segment followed by the forced trivial split
        new_cells: list[_AuditCell] = []
        for c in cells:
            local = [
                s for s in level_segs if max(s[0], c.xl) < min(s[1], c.xr) and c.yb <= s[2] <= c.yt
            ]
            pieces = [c]
            for rank, s in enumerate(local, start=1):
                if rank % q == 0:
                    h = s[2]
                    split = []
                    for p in pieces:
                        if p.yb < h < p.yt:
                            for nyb, nyt in ((p.yb, h), (h, p.yt)):
                                live = tuple(t for t in p.live if nyb <= t[2] <= nyt)
                                split.append(_AuditCell(p.xl, p.xr, nyb, nyt, live))
                        else:
                            split.append(p)
                    pieces = split
            new_cells.extend(pieces)
        cells = new_cells
        check_bounds(f"level {j} strip adds")
        # add the level-j reference segments themselves
        out = []
        for c in cells:
            added = []
            for a, b, y in level_segs:
                lo, hi = max(a, c.xl), min(b, c.xr)
                if lo < hi and c.yb <= y <= c.yt:
                    added.append((lo, hi, y, j))
            if added:
                for _, _, _, tag in c.live:
                    if tag <= j - 3:
                        violations.append(
                            f"level {j} add: stale level-{tag} segment in cell "
                            f"[{c.xl},{c.xr}]x[{c.yb},{c.yt}]"
                        )
                out.append(
                    _AuditCell(c.xl, c.xr, c.yb, c.yt, c.live + tuple(added))
                )
            else:
                out.append(c)
        cells = out
        check_bounds(f"level {j} adds")

    return AuditReport(not violations, tuple(violations), params.d, max_live)
