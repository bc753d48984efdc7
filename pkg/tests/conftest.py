"""Shared fixtures and independent oracles.

Every oracle here is deliberately implemented with a different algorithm than
the code under test: bitmask DP for minimum-cost covers, exhaustive subset
search for vertex covers and hitting sets, raw integer-grid enumeration for
stabbing optima, and basic-solution enumeration for LP optima.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from stabkit.geometry import Instance, KShape, Rect
from stabkit.instance_io import GenParams, Graph, SetSystem, gen_random, graph


# ---------------------------------------------------------------------------
# minimum-cost set cover by bitmask dynamic programming


def min_cover_cost(universe: int, sets: list[tuple[Fraction, frozenset[int]]]) -> Fraction:
    full = (1 << universe) - 1
    masks = [sum(1 << e for e in members) for _, members in sets]
    dp: list[Fraction | None] = [None] * (full + 1)
    dp[0] = Fraction(0)
    for mask in range(full + 1):
        if dp[mask] is None or mask == full:
            continue
        rest = ~mask & full
        low = rest & -rest
        for (w, _), smask in zip(sets, masks):
            if smask & low:
                nm = mask | smask
                cand = dp[mask] + w
                if dp[nm] is None or cand < dp[nm]:
                    dp[nm] = cand
    assert dp[full] is not None, "universe not coverable"
    return dp[full]


# ---------------------------------------------------------------------------
# raw integer-grid stabbing optimum (independent of candidate_segments)


def raw_grid_optimum(inst: Instance) -> Fraction:
    """Optimal stabbing cost over segments with endpoints on any x-boundary
    pair and y on any integer in range; instance coordinates must be integers."""
    rects = []
    for idx, shape in enumerate(inst.shapes):
        for r in shape.rects:
            assert all(v.denominator == 1 for v in (r.xl, r.xr, r.yb, r.yt))
            rects.append((idx, int(r.xl), int(r.xr), int(r.yb), int(r.yt)))
    xs = sorted({v for _, xl, xr, _, _ in rects for v in (xl, xr)})
    y_lo = min(yb for *_, yb, _ in rects)
    y_hi = max(yt for *_, _, yt in rects)
    best: dict[int, Fraction] = {}
    for y in range(y_lo, y_hi + 1):
        alive = [(i, xl, xr) for i, xl, xr, yb, yt in rects if yb <= y <= yt]
        for a, b in itertools.combinations_with_replacement(xs, 2):
            mask = 0
            for i, xl, xr in alive:
                if a <= xl and xr <= b:
                    mask |= 1 << i
            if mask:
                cost = Fraction(b - a)
                if mask not in best or cost < best[mask]:
                    best[mask] = cost
    sets = [(w, frozenset(i for i in range(inst.n) if m >> i & 1)) for m, w in best.items()]
    return min_cover_cost(inst.n, sets)


# ---------------------------------------------------------------------------
# brute-force vertex cover / hitting set


def brute_vertex_cover(g: Graph) -> int:
    best = g.n
    for mask in range(1 << g.n):
        members = {v + 1 for v in range(g.n) if mask >> v & 1}
        if all(i in members or j in members for i, j in g.edges):
            best = min(best, len(members))
    return best


def brute_hitting_set(fs: SetSystem) -> int:
    best = fs.n
    for mask in range(1 << fs.n):
        members = {v + 1 for v in range(fs.n) if mask >> v & 1}
        if all(members & set(s) for s in fs.sets):
            best = min(best, len(members))
    return best


# ---------------------------------------------------------------------------
# LP optimum by basic-solution enumeration


def _solve_square(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    n = len(A)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if M[r][col] != 0), None)
        if pivot is None:
            return None
        M[col], M[pivot] = M[pivot], M[col]
        inv = M[col][col]
        M[col] = [v / inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [v - f * w for v, w in zip(M[r], M[col])]
    return [M[i][n] for i in range(n)]


def lp_vertex_optimum(
    weights: list[Fraction], rows: list[frozenset[int]], num_vars: int
) -> Fraction:
    """min w.z subject to coverage >= 1 and z >= 0 by enumerating all basic
    feasible solutions (vertices) of the feasible polyhedron."""
    constraints: list[tuple[list[Fraction], Fraction]] = []
    for row in rows:
        constraints.append(([Fraction(1 if j in row else 0) for j in range(num_vars)], Fraction(1)))
    for j in range(num_vars):
        coeff = [Fraction(0)] * num_vars
        coeff[j] = Fraction(1)
        constraints.append((coeff, Fraction(0)))

    def feasible(z: list[Fraction]) -> bool:
        return all(
            sum(c * v for c, v in zip(coeffs, z)) >= rhs for coeffs, rhs in constraints
        )

    best: Fraction | None = None
    for subset in itertools.combinations(range(len(constraints)), num_vars):
        A = [constraints[i][0] for i in subset]
        b = [constraints[i][1] for i in subset]
        z = _solve_square(A, b)
        if z is None or not feasible(z):
            continue
        value = sum(w * v for w, v in zip(weights, z))
        if best is None or value < best:
            best = value
    assert best is not None, "LP has no basic feasible solution"
    return best


# ---------------------------------------------------------------------------
# seeded samplers


def connected_graphs(seed: int, count: int, max_n: int = 6) -> list[Graph]:
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(2, max_n)
        edges = [e for e in itertools.combinations(range(1, n + 1), 2) if rng.random() < 0.5]
        if not edges:
            continue
        adj = {v: set() for v in range(1, n + 1)}
        for i, j in edges:
            adj[i].add(j)
            adj[j].add(i)
        seen = {1}
        stack = [1]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != n:
            continue
        out.append(graph(n, edges))
    return out


def random_set_systems(seed: int, count: int, max_n: int = 6, max_sets: int = 6, max_size: int = 4) -> list[SetSystem]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(2, max_n)
        num = rng.randint(1, max_sets)
        sets = []
        for _ in range(num):
            size = rng.randint(1, min(max_size, n))
            sets.append(tuple(sorted(rng.sample(range(1, n + 1), size))))
        out.append(SetSystem(n, tuple(sets)))
    return out


def small_instances(seed: int, count: int, max_n: int = 5, max_k: int = 3, x_max: int = 8) -> list[Instance]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        params = GenParams(
            seed=rng.randrange(2**32),
            count=rng.randint(1, max_n),
            k=rng.randint(1, max_k),
            coord_bounds=(x_max, 8),
        )
        out.append(gen_random(params))
    return out


def as_plain_discrete(inst: Instance, eps: Fraction, alpha: int):
    """Wrap an integer-coordinate instance as already-discrete.

    The y-levels are squashed into [0, (k+1)n] first so the shapes fit the
    root cell; x coordinates must already sit in [0, alpha*n].
    """
    from stabkit.decompose import compress_y
    from stabkit.ptas_dp import Cluster, DiscreteInstance, derive_d

    n = max(inst.n, 1)
    d = derive_d(eps, n)
    assert all(0 <= s.x_min and s.x_max <= alpha * n for s in inst.shapes)
    compressed, levels = compress_y(inst)
    return DiscreteInstance(
        compressed,
        eps,
        alpha,
        d,
        Fraction(1),
        (),
        tuple(levels),
        (Cluster(Fraction(0), Fraction(alpha * n), Fraction(0)),),
        0,
    )


@pytest.fixture(scope="session")
def unit_square_instance() -> Instance:
    square = KShape((Rect(Fraction(0), Fraction(1), Fraction(0), Fraction(1)),))
    return Instance((square,), 1)
