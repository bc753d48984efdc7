"""Candidate segments, the weighted set-cover view, greedy, and the exact oracle.

Candidate enumeration follows the boundary-translation argument: an optimal
segment can be shrunk so both endpoints sit on vertical shape boundaries and
slid to a horizontal boundary without changing what it stabs. Everything
downstream works on the deduplicated candidate set, which keeps one shortest
segment per distinct stab set.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from .geometry import (
    Coord,
    HSegment,
    Instance,
    Solution,
    ValidationReport,
    validate_instance,
)

ZERO = Fraction(0)


class CoverError(ValueError):
    pass


def harmonic(n: int) -> Fraction:
    """H_n = sum_{i<=n} 1/i; the greedy set-cover guarantee."""
    return sum((Fraction(1, i) for i in range(1, n + 1)), ZERO)


@dataclass(frozen=True)
class CandidateSet:
    segments: tuple[HSegment, ...]
    stab_sets: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.segments)


def _require_valid(inst: Instance) -> None:
    report: ValidationReport = validate_instance(inst)
    if not report.ok:
        raise CoverError(f"invalid instance: {report.errors[0]}")


def candidate_segments(inst: Instance) -> CandidateSet:
    """Finite redundancy-free candidate pool containing an optimal solution."""
    _require_valid(inst)
    xs = sorted({c for s in inst.shapes for r in s.rects for c in (r.xl, r.xr)})
    ys = sorted({c for s in inst.shapes for r in s.rects for c in (r.yb, r.yt)})
    # best candidate per stab set: (length, y, xl, xr) minimal
    best: dict[frozenset[int], tuple] = {}
    for y in ys:
        # per shape, the rect x-intervals alive at this height
        alive: list[list[tuple[Coord, Coord]]] = []
        for shape in inst.shapes:
            spans = [(r.xl, r.xr) for r in shape.rects if r.yb <= y <= r.yt]
            alive.append(spans)
        for ai, a in enumerate(xs):
            for b in xs[ai:]:
                stabbed = frozenset(
                    i
                    for i, spans in enumerate(alive)
                    if any(a <= lo and hi <= b for lo, hi in spans)
                )
                if not stabbed:
                    continue
                key = (b - a, y, a, b)
                if stabbed not in best or key < best[stabbed]:
                    best[stabbed] = key
    items = sorted(best.items(), key=lambda kv: kv[1])
    segments = tuple(HSegment(xl, xr, y) for _, (_, y, xl, xr) in items)
    stab_sets = tuple(stab for stab, _ in items)
    return CandidateSet(segments, stab_sets)


@dataclass(frozen=True)
class CoverInstance:
    universe: int
    weights: tuple[Coord, ...]
    members: tuple[frozenset[int], ...]


def to_setcover(inst: Instance, cands: CandidateSet) -> CoverInstance:
    covered = frozenset().union(*cands.stab_sets) if cands.stab_sets else frozenset()
    if covered != frozenset(range(inst.n)):
        raise CoverError("uncoverable shape; cannot happen for valid instances")
    weights = tuple(s.length for s in cands.segments)
    return CoverInstance(inst.n, weights, cands.stab_sets)


@dataclass(frozen=True)
class GreedyResult:
    chosen: tuple[int, ...]
    weight: Coord


def greedy_setcover(ci: CoverInstance) -> GreedyResult:
    """Classic weight-per-new-element greedy; H_m-approximate.

    Ties break on smaller weight, then lexicographically smallest member set,
    so runs are reproducible.
    """
    uncovered = set(range(ci.universe))
    chosen: list[int] = []
    total = ZERO
    member_keys = [tuple(sorted(m)) for m in ci.members]
    while uncovered:
        best_idx = None
        best_key = None
        for idx, members in enumerate(ci.members):
            new = len(members & uncovered)
            if new == 0:
                continue
            key = (ci.weights[idx] / new, ci.weights[idx], member_keys[idx])
            if best_key is None or key < best_key:
                best_key = key
                best_idx = idx
        if best_idx is None:
            raise CoverError("uncoverable element in greedy_setcover")
        chosen.append(best_idx)
        total += ci.weights[best_idx]
        uncovered -= ci.members[best_idx]
    return GreedyResult(tuple(chosen), total)


def greedy_stab(inst: Instance) -> Solution:
    """Candidate enumeration -> set cover -> greedy; feasible by construction."""
    if inst.n == 0:
        return Solution((), ZERO)
    cands = candidate_segments(inst)
    ci = to_setcover(inst, cands)
    picked = greedy_setcover(ci)
    return Solution.of_segments(cands.segments[i] for i in picked.chosen)


@dataclass(frozen=True)
class ExactResult:
    solution: Solution
    optimal: bool
    nodes: int

    @property
    def status(self) -> str:
        return "optimal" if self.optimal else "budget exceeded"


class _Budget:
    __slots__ = ("left",)

    def __init__(self, limit: int | None):
        self.left = limit

    def spend(self) -> bool:
        if self.left is None:
            return True
        if self.left <= 0:
            return False
        self.left -= 1
        return True


def _cover_lower_bound(
    uncovered: frozenset[int], weights, members, covering
) -> Coord:
    """Admissible bound: max of per-element cheapest cover and the uniform dual."""
    if not uncovered:
        return ZERO
    per_element = max(
        min(weights[i] for i in covering[e]) for e in uncovered
    )
    # uniform dual value t per uncovered element, feasible while
    # t * |members & uncovered| <= weight for every set
    t = None
    for w, m in zip(weights, members):
        hit = len(m & uncovered)
        if hit:
            bound = w / hit
            t = bound if t is None or bound < t else t
    dual = t * len(uncovered) if t is not None else ZERO
    return max(per_element, dual)


def exact_solve(
    inst: Instance,
    node_budget: int | None = None,
    lower_bound: Coord | None = None,
) -> ExactResult:
    """Branch-and-bound over the candidate set; certified optimum on completion.

    Branches on the lowest-index unstabbed shape over the candidates stabbing
    it; memoizes exact completion costs per covered set. `lower_bound` (e.g. a
    cached LP value) can certify a greedy incumbent optimal without searching.
    """
    _require_valid(inst)
    if inst.n == 0:
        return ExactResult(Solution((), ZERO), True, 0)
    cands = candidate_segments(inst)
    ci = to_setcover(inst, cands)
    weights = ci.weights
    members = ci.members
    full = frozenset(range(ci.universe))
    covering: dict[int, list[int]] = {e: [] for e in range(ci.universe)}
    for idx, m in enumerate(members):
        for e in m:
            covering[e].append(idx)

    greedy = greedy_setcover(ci)
    incumbent_sets = list(greedy.chosen)
    incumbent_cost = greedy.weight
    if lower_bound is not None and incumbent_cost <= lower_bound:
        sol = Solution.of_segments(cands.segments[i] for i in incumbent_sets)
        return ExactResult(sol, True, 0)

    budget = _Budget(node_budget)
    memo: dict[frozenset[int], tuple[Coord, tuple[int, ...]]] = {}
    exhausted = False

    def solve(covered: frozenset[int]) -> tuple[Coord, tuple[int, ...]] | None:
        nonlocal exhausted
        if covered == full:
            return ZERO, ()
        hit = memo.get(covered)
        if hit is not None:
            return hit
        if not budget.spend():
            exhausted = True
            return None
        uncovered = full - covered
        element = min(uncovered)
        best: tuple[Coord, tuple[int, ...]] | None = None
        for idx in covering[element]:
            if best is not None:
                remaining = uncovered - members[idx]
                lb = _cover_lower_bound(remaining, weights, members, covering)
                if weights[idx] + lb >= best[0]:
                    continue
            sub = solve(covered | members[idx])
            if sub is None:
                return None
            cost = weights[idx] + sub[0]
            choice = (cost, tuple(sorted((idx,) + sub[1])))
            if best is None or choice < best:
                best = choice
        memo[covered] = best
        return best

    result = solve(frozenset())
    nodes = len(memo)
    if result is None or exhausted:
        sol = Solution.of_segments(cands.segments[i] for i in incumbent_sets)
        return ExactResult(sol, False, nodes)
    cost, chosen = result
    if cost > incumbent_cost:
        # cannot happen: greedy covers are in the search space
        raise CoverError("search missed the greedy incumbent")
    sol = Solution.of_segments(cands.segments[i] for i in chosen)
    return ExactResult(sol, True, nodes)
