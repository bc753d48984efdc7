"""Benchmark harness: seeded suites, verified rows, CSV plus optional figures."""

from __future__ import annotations

import io
import itertools
import json
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .cover import exact_solve, greedy_stab, candidate_segments
from .geometry import Coord, Instance, Solution, verify_solution
from .instance_io import (
    GenParams,
    Graph,
    ParseError,
    SetSystem,
    gen_random,
    graph,
    hs_to_stabbing,
    vc_to_stabbing,
)
from .lp_approx import RectStabber, build_lp, ok_pipeline, solve_lp
from .ptas_dp import PtasParams, discretize, dp_solve, map_back

ZERO = Fraction(0)

CSV_HEADER = (
    "instance,n,k,algorithm,cost,lp_bound,exact_cost,ratio_vs_exact,ratio_vs_lp,wall_ms"
)

KNOWN_ALGORITHMS = ("exact", "greedy", "lp-scale", "ptas")


class BenchError(ValueError):
    pass


@dataclass(frozen=True)
class BenchRow:
    instance: str
    n: int
    k: int
    algorithm: str
    cost: Coord
    lp_bound: Coord
    exact_cost: Coord | None
    wall_ms: int

    @property
    def ratio_vs_exact(self) -> Fraction | None:
        if self.exact_cost is None or self.exact_cost == 0:
            return None
        return self.cost / self.exact_cost

    @property
    def ratio_vs_lp(self) -> Fraction | None:
        if self.lp_bound == 0:
            return None
        return self.cost / self.lp_bound


def _rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _ratio(value: Fraction | None) -> str:
    if value is None:
        return ""
    scaled = value * 10**6
    whole = scaled.numerator // scaled.denominator
    if 2 * (scaled.numerator % scaled.denominator) >= scaled.denominator:
        whole += 1
    head, tail = divmod(whole, 10**6)
    return f"{head}.{tail:06d}"


def rows_to_csv(rows: list[BenchRow]) -> str:
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for r in sorted(rows, key=lambda r: (r.instance, r.algorithm)):
        out.write(
            ",".join(
                (
                    r.instance,
                    str(r.n),
                    str(r.k),
                    r.algorithm,
                    _rational(r.cost),
                    _rational(r.lp_bound),
                    _rational(r.exact_cost) if r.exact_cost is not None else "",
                    _ratio(r.ratio_vs_exact),
                    _ratio(r.ratio_vs_lp),
                    str(r.wall_ms),
                )
            )
            + "\n"
        )
    return out.getvalue()


# ---------------------------------------------------------------------------
# suite configuration


def _frac(raw, default=None) -> Fraction:
    if raw is None:
        return default
    if isinstance(raw, bool):
        raise BenchError(f"bad rational {raw!r}")
    if isinstance(raw, (int, Fraction)):
        return Fraction(raw)
    return Fraction(str(raw))


def _random_graph(rng: random.Random, n: int, edge_prob: Fraction) -> Graph:
    edges = [
        (i, j)
        for i, j in itertools.combinations(range(1, n + 1), 2)
        if rng.random() < float(edge_prob)
    ]
    if not edges:
        edges = [(1, 2)]
    return graph(n, edges)


def _random_sets(rng: random.Random, n: int, count: int, max_size: int) -> SetSystem:
    sets = []
    for _ in range(count):
        size = rng.randint(1, max(1, min(max_size, n)))
        sets.append(tuple(sorted(rng.sample(range(1, n + 1), size))))
    return SetSystem(n, tuple(sets))


def suite_instances(config: dict) -> list[tuple[str, Instance, str]]:
    """Expand the suite config into (id, instance, family type) triples."""
    out: list[tuple[str, Instance, str]] = []
    for fam in config.get("families", []):
        ftype = fam.get("type", "random")
        fid = fam.get("id", ftype)
        seed = int(fam.get("seed", 0))
        reps = int(fam.get("instances", 1))
        for i in range(reps):
            name = f"{fid}-{i:03d}"
            if ftype == "random":
                params = GenParams(
                    seed=seed + i,
                    count=int(fam.get("count", 4)),
                    k=int(fam.get("k", 2)),
                    coord_bounds=(int(fam.get("x_max", 8)), int(fam.get("y_max", 8))),
                    width_ratio_delta=_frac(fam.get("delta")),
                    hourglass_only=bool(fam.get("hourglass", False)),
                )
                out.append((name, gen_random(params), ftype))
            elif ftype == "vc":
                rng = random.Random(seed + i)
                g = _random_graph(
                    rng, int(fam.get("vertices", 5)), _frac(fam.get("edge_prob", "1/2"))
                )
                inst, _ = vc_to_stabbing(g)
                out.append((name, inst, ftype))
            elif ftype == "hitting-set":
                rng = random.Random(seed + i)
                fs = _random_sets(
                    rng,
                    int(fam.get("elements", 5)),
                    int(fam.get("sets", 4)),
                    int(fam.get("max_size", 3)),
                )
                inst, _ = hs_to_stabbing(fs)
                out.append((name, inst, ftype))
            else:
                raise BenchError(f"unknown family type {ftype!r}")
    return out


def _solve_with(algorithm: str, inst: Instance, config: dict) -> Solution:
    if algorithm == "exact":
        res = exact_solve(inst)
        if not res.optimal:
            raise BenchError("exact solve ran out of budget")
        return res.solution
    if algorithm == "greedy":
        return greedy_stab(inst)
    if algorithm == "lp-scale":
        return ok_pipeline(inst, RectStabber("exact")).solution
    if algorithm == "ptas":
        eps = _frac(config.get("eps", "1/10"))
        dinst = discretize(inst, eps)
        params = PtasParams(
            _frac(config.get("dp_eps", "1/2")), dinst.alpha, max(dinst.instance.n, 1)
        )
        res = dp_solve(dinst, params)
        return map_back(dinst, res.solution)
    raise BenchError(f"unknown algorithm {algorithm!r}")


def run_suite(config: dict) -> list[BenchRow]:
    """Run every (instance, algorithm) pair, verifying each solution."""
    algorithms = config.get("algorithms", ["exact", "greedy"])
    for algo in algorithms:
        if algo not in KNOWN_ALGORITHMS:
            raise BenchError(f"unknown algorithm {algo!r}")
    instances = suite_instances(config)

    def run_one(item) -> list[BenchRow]:
        name, inst, ftype = item
        cands = candidate_segments(inst)
        lp_bound = solve_lp(build_lp(inst, cands)).objective if inst.n else ZERO
        exact_res = exact_solve(inst)
        exact_cost = exact_res.solution.cost if exact_res.optimal else None
        if ftype == "vc":
            _check_vc_equivalence(inst, exact_cost)
        rows = []
        for algo in algorithms:
            started = time.perf_counter()
            sol = _solve_with(algo, inst, config)
            elapsed = int((time.perf_counter() - started) * 1000)
            report = verify_solution(inst, sol)
            if not report.feasible:
                raise BenchError(
                    f"{algo} produced an infeasible solution on {name}: {report.unstabbed}"
                )
            rows.append(
                BenchRow(name, inst.n, inst.k, algo, sol.cost, lp_bound, exact_cost, elapsed)
            )
        return rows

    workers = int(os.environ.get("STABKIT_THREADS", "1") or "1")
    results: list[BenchRow] = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rows in pool.map(run_one, instances):
                results.extend(rows)
    else:
        for item in instances:
            results.extend(run_one(item))
    return sorted(results, key=lambda r: (r.instance, r.algorithm))


def _check_vc_equivalence(inst: Instance, exact_cost: Fraction | None) -> None:
    """Harness guard: reduction instances must price exactly like min vertex cover."""
    if exact_cost is None:
        return
    # recover the graph from the square/bridge geometry
    edges = []
    n = 0
    for shape in inst.shapes:
        lows = shape.rects[0]
        highs = shape.rects[-1]
        i = int(lows.yb) // 2 + 1
        j = int(highs.yb) // 2 + 1
        edges.append((i, j))
        n = max(n, j)
    best = None
    for mask in range(1 << n):
        members = {v + 1 for v in range(n) if mask >> v & 1}
        if all(i in members or j in members for i, j in edges):
            size = len(members)
            best = size if best is None else min(best, size)
    if best != exact_cost:
        raise BenchError(
            f"vertex-cover equivalence violated: stabbing {exact_cost} vs cover {best}"
        )


# ---------------------------------------------------------------------------
# figures


def plot_rows(rows: list[BenchRow], out_dir: str | Path) -> list[Path]:
    """Render summary figures for a finished suite next to the CSV output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    by_algo: dict[str, list[BenchRow]] = {}
    for r in rows:
        by_algo.setdefault(r.algorithm, []).append(r)

    fig, ax = plt.subplots(figsize=(6, 4))
    labels, means = [], []
    for algo in sorted(by_algo):
        ratios = [float(r.ratio_vs_lp) for r in by_algo[algo] if r.ratio_vs_lp is not None]
        if ratios:
            labels.append(algo)
            means.append(sum(ratios) / len(ratios))
    ax.bar(labels, means, color="#7aa6c2")
    ax.axhline(1.0, color="#c23b22", linewidth=1, linestyle="--")
    ax.set_ylabel("mean cost / LP bound")
    ax.set_title("solution quality against the LP certificate")
    fig.tight_layout()
    path = out / "ratio_by_algorithm.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for algo in sorted(by_algo):
        xs = [float(r.lp_bound) for r in by_algo[algo]]
        ys = [float(r.cost) for r in by_algo[algo]]
        ax.scatter(xs, ys, label=algo, s=18, alpha=0.8)
    lim = max(
        [float(r.cost) for r in rows] + [float(r.lp_bound) for r in rows] + [1.0]
    )
    ax.plot([0, lim], [0, lim], color="#888888", linewidth=1, linestyle=":")
    ax.set_xlabel("LP lower bound")
    ax.set_ylabel("solution cost")
    ax.legend()
    fig.tight_layout()
    path = out / "cost_vs_lp.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def load_suite(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
