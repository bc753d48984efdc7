"""Fractional stabbing relaxation, exact simplex, and the k-scaling pipeline.

The LP (min sum |s| z_s subject to per-shape coverage >= 1, z >= 0) is solved
exactly over rationals. Internally we pivot on the dual, whose all-slack basis
is feasible because segment lengths are nonnegative, and read the primal
solution off the reduced costs; Bland's rule keeps the pivoting finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

from .cover import CandidateSet, ExactResult, candidate_segments, exact_solve, greedy_stab
from .geometry import (
    Coord,
    HSegment,
    Instance,
    KShape,
    Rect,
    Solution,
    bounding_rect,
    stabs_rect,
    validate_instance,
)

ZERO = Fraction(0)
ONE = Fraction(1)


class LpError(ValueError):
    pass


@dataclass(frozen=True)
class LpModel:
    segments: tuple[HSegment, ...]
    weights: tuple[Coord, ...]
    rows: tuple[tuple[int, ...], ...]  # per shape: candidate indices stabbing it

    @property
    def num_vars(self) -> int:
        return len(self.segments)

    @property
    def num_constraints(self) -> int:
        return len(self.rows)


def build_lp(inst: Instance, cands: CandidateSet) -> LpModel:
    rows: list[tuple[int, ...]] = []
    for i in range(inst.n):
        row = tuple(j for j, stab in enumerate(cands.stab_sets) if i in stab)
        if not row:
            raise LpError(f"shape {i} has no stabbing candidate")
        rows.append(row)
    weights = tuple(s.length for s in cands.segments)
    return LpModel(cands.segments, weights, tuple(rows))


@dataclass(frozen=True)
class FracSolution:
    values: tuple[Coord, ...]
    objective: Coord

    def value_of(self, var: int) -> Coord:
        return self.values[var]


def solve_lp(model: LpModel) -> FracSolution:
    """Exact rational optimum of the coverage LP via dual simplex pivoting."""
    m = model.num_constraints  # dual variables y_i
    n = model.num_vars  # dual constraints / primal variables
    width = m + n + 1
    rhs = width - 1
    # dual constraint j: sum_{i covered by var j} y_i + slack_j = w_j
    tableau: list[list[Fraction]] = []
    var_rows: list[set[int]] = [set() for _ in range(n)]
    for i, row in enumerate(model.rows):
        for j in row:
            var_rows[j].add(i)
    for j in range(n):
        line = [ZERO] * width
        for i in var_rows[j]:
            line[i] = ONE
        line[m + j] = ONE
        line[rhs] = model.weights[j]
        tableau.append(line)
    zrow = [ZERO] * width
    for i in range(m):
        zrow[i] = -ONE
    basis = [m + j for j in range(n)]

    while True:
        # Bland: entering = lowest-index negative reduced cost
        col = next((c for c in range(width - 1) if zrow[c] < 0), None)
        if col is None:
            break
        pivot_row = None
        best_ratio = None
        for r in range(n):
            coef = tableau[r][col]
            if coef > 0:
                ratio = tableau[r][rhs] / coef
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[r] < basis[pivot_row])
                ):
                    best_ratio = ratio
                    pivot_row = r
        if pivot_row is None:
            raise LpError("dual unbounded; primal LP infeasible, cannot happen")
        piv = tableau[pivot_row][col]
        row = tableau[pivot_row]
        if piv != ONE:
            tableau[pivot_row] = row = [v / piv for v in row]
        for r in range(n):
            if r != pivot_row and tableau[r][col] != 0:
                factor = tableau[r][col]
                tableau[r] = [a - factor * b for a, b in zip(tableau[r], row)]
        if zrow[col] != 0:
            factor = zrow[col]
            zrow = [a - factor * b for a, b in zip(zrow, row)]
        basis[pivot_row] = col

    objective = zrow[rhs]
    values = tuple(zrow[m + j] for j in range(n))
    # exactness audit: primal feasibility and strong duality must hold
    if any(v < 0 for v in values):
        raise LpError("negative primal value recovered")
    for i, row in enumerate(model.rows):
        if sum((values[j] for j in row), ZERO) < 1:
            raise LpError(f"recovered primal violates constraint {i}")
    if sum((values[j] * model.weights[j] for j in range(n)), ZERO) != objective:
        raise LpError("strong duality check failed")
    return FracSolution(values, objective)


@dataclass(frozen=True)
class RectStabber:
    """Pluggable plain-rectangle stabbing subroutine."""

    strategy: Literal["exact", "greedy"] = "exact"
    node_budget: int | None = None


@dataclass(frozen=True)
class RectStabResult:
    solution: Solution
    optimal: bool


def rect_stab(rects: Sequence[Rect], stabber: RectStabber) -> RectStabResult:
    """Stab plain rectangles (treated as 1-shapes) with the chosen strategy."""
    if not rects:
        return RectStabResult(Solution((), ZERO), True)
    inst = Instance(tuple(KShape((r,)) for r in rects), 1)
    if stabber.strategy == "exact":
        res: ExactResult = exact_solve(inst, node_budget=stabber.node_budget)
        return RectStabResult(res.solution, res.optimal)
    if stabber.strategy == "greedy":
        return RectStabResult(greedy_stab(inst), False)
    raise LpError(f"unknown stabber strategy {stabber.strategy!r}")


def scale_extract(
    inst: Instance, cands: CandidateSet, frac: FracSolution, k: int | None = None
) -> list[tuple[int, Rect]]:
    """Pick one rectangle per shape whose fractional stab mass reaches 1/k.

    Existence is the pigeonhole over the <= k rectangles of a covered shape.
    Among qualifying rectangles the narrowest (then lowest) wins: cheaper for
    the downstream rectangle stabber.
    """
    if k is None:
        k = inst.k
    threshold = Fraction(1, k)
    picked: list[tuple[int, Rect]] = []
    for i, shape in enumerate(inst.shapes):
        best: tuple[Coord, int] | None = None
        for r_idx, r in enumerate(shape.rects):
            mass = sum(
                (
                    frac.values[j]
                    for j, seg in enumerate(cands.segments)
                    if frac.values[j] != 0 and stabs_rect(seg, r)
                ),
                ZERO,
            )
            if mass >= threshold:
                key = (r.width, r_idx)
                if best is None or key < best:
                    best = key
        if best is None:
            raise LpError(f"no rectangle of shape {i} reaches mass 1/{k}")
        picked.append((i, shape.rects[best[1]]))
    return picked


@dataclass(frozen=True)
class PipelineResult:
    solution: Solution
    lp_bound: Coord
    rects: tuple[tuple[int, Rect], ...]
    stabber_optimal: bool

    @property
    def ratio(self) -> Coord:
        if self.lp_bound == 0:
            return ONE
        return self.solution.cost / self.lp_bound


def ok_pipeline(inst: Instance, stabber: RectStabber | None = None) -> PipelineResult:
    """LP -> per-shape rectangle selection -> rectangle stabbing.

    The returned solution stabs the selected rectangles, hence every shape;
    the LP objective doubles as a quality certificate.
    """
    report = validate_instance(inst)
    if not report.ok:
        raise LpError(f"invalid instance: {report.errors[0]}")
    if stabber is None:
        stabber = RectStabber()
    cands = candidate_segments(inst)
    model = build_lp(inst, cands)
    frac = solve_lp(model)
    picked = scale_extract(inst, cands, frac)
    stab = rect_stab([r for _, r in picked], stabber)
    return PipelineResult(stab.solution, frac.objective, tuple(picked), stab.optimal)


@dataclass(frozen=True)
class BoxReduction:
    rect_instance: Instance
    delta: Coord


def bounding_box_reduce(inst: Instance) -> BoxReduction:
    """Replace each shape by its bounding box; delta = min w_min/w_max per shape.

    Any stabbing of the box instance stabs the original shapes' boxes, and an
    optimal original solution extended by factor 1/delta per side covers the
    boxes, so the box optimum is within O(1/delta) of the original optimum.
    """
    report = validate_instance(inst)
    if not report.ok:
        raise LpError(f"invalid instance: {report.errors[0]}")
    boxes = tuple(KShape((bounding_rect(s),)) for s in inst.shapes)
    delta = min((s.w_min / s.w_max for s in inst.shapes), default=ONE)
    return BoxReduction(Instance(boxes, 1), delta)
