"""The `stabkit` command line: generate, solve, verify, bound, decompose, bench, render.

Machine-readable output goes to stdout, diagnostics to stderr.  Exit codes:
0 success, 1 infeasibility/violation (including unproven optimality), 2 usage
or parse errors.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import bench as bench_mod
from .cover import exact_solve, greedy_stab
from .decompose import DecomposeError, best_offset, strip_partition
from .geometry import CostMismatchError, GeometryError, verify_solution
from .instance_io import (
    GenParams,
    ParseError,
    gen_random,
    hs_to_stabbing,
    read_graph,
    read_instance,
    read_set_system,
    read_solution,
    vc_to_stabbing,
    write_instance,
    write_solution,
)
from .lp_approx import LpError, RectStabber, build_lp, ok_pipeline, solve_lp
from .cover import candidate_segments
from .ptas_dp import PtasError, PtasParams, discretize, dp_solve, map_back
from .render import dec, render_svg


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _write(path: str | None, payload: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(payload)
        return
    try:
        Path(path).write_text(payload, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc


def _load_instance(path: str):
    return read_instance(_read(path))


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    if args.type == "random":
        params = GenParams(
            seed=args.seed,
            count=args.count,
            k=args.k,
            coord_bounds=(args.x_max, args.y_max),
            width_ratio_delta=args.delta,
            hourglass_only=args.hourglass,
        )
        inst = gen_random(params)
        _write(args.output, write_instance(inst))
        return 0
    if args.type == "vc":
        if not args.graph:
            raise CliError("--type vc requires --graph FILE")
        inst, meta = vc_to_stabbing(read_graph(_read(args.graph)))
        _write(args.output, write_instance(inst, meta))
        return 0
    if args.type == "hitting-set":
        if not args.sets:
            raise CliError("--type hitting-set requires --sets FILE")
        inst, meta = hs_to_stabbing(read_set_system(_read(args.sets)))
        _write(args.output, write_instance(inst, meta))
        return 0
    raise CliError(f"unknown generator type {args.type!r}")


def cmd_solve(args) -> int:
    inst, _ = _load_instance(args.input)
    proven = True
    if args.algo == "exact":
        res = exact_solve(inst, node_budget=args.budget)
        sol, proven = res.solution, res.optimal
    elif args.algo == "greedy":
        sol = greedy_stab(inst)
    elif args.algo == "lp-scale":
        stabber = RectStabber(args.stabber, node_budget=args.budget)
        pipe = ok_pipeline(inst, stabber)
        sol = pipe.solution
        print(
            f"lp bound {pipe.lp_bound} ratio {dec(pipe.ratio)}",
            file=sys.stderr,
        )
    elif args.algo == "ptas":
        dinst = discretize(inst, args.eps)
        n = max(dinst.instance.n, 1)
        if args.offset_sweep:
            # offsets repeat modulo the finest enumerated grid spacing
            finest = dinst.alpha * args.dp_eps ** (min(dinst.d + 2, 3) - 2)
            count = max(1, int(finest / args.dp_eps**dinst.d))
            offsets = [t * args.dp_eps**dinst.d for t in range(count)]
        else:
            offsets = [Fraction(0)]
        res = None
        for offset in offsets:
            params = PtasParams(args.dp_eps, dinst.alpha, n, add_cap=args.add_cap, offset=offset)
            attempt = dp_solve(dinst, params, stabber=RectStabber(args.stabber))
            if res is None or attempt.cost < res.cost:
                res = attempt
        proven = res.optimal
        sol = map_back(dinst, res.solution)
        lp = solve_lp(build_lp(inst, candidate_segments(inst))).objective
        ratio = sol.cost / lp if lp else Fraction(1)
        print(
            f"dp cells {res.stats.cells} ops {res.stats.ops} "
            f"offsets {len(offsets)} lp-bound {lp} ratio {dec(ratio)}",
            file=sys.stderr,
        )
    else:
        raise CliError(f"unknown algorithm {args.algo!r}")
    report = verify_solution(inst, sol)
    if not report.feasible:
        print(f"infeasible output; unstabbed {list(report.unstabbed)}", file=sys.stderr)
        return 1
    _write(args.output, write_solution(sol))
    if not proven:
        print("budget exceeded; emitted best incumbent", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args) -> int:
    inst, _ = _load_instance(args.instance)
    sol = read_solution(_read(args.solution))
    try:
        report = verify_solution(inst, sol)
    except CostMismatchError as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return 1
    if report.feasible:
        print(f"feasible cost {dec(report.cost)}")
        return 0
    print(f"infeasible unstabbed {' '.join(map(str, report.unstabbed))}")
    return 1


def cmd_lowerbound(args) -> int:
    inst, _ = _load_instance(args.input)
    cands = candidate_segments(inst)
    frac = solve_lp(build_lp(inst, cands))
    value = frac.objective
    if value.denominator == 1:
        print(f"{value.numerator} ({dec(value)})")
    else:
        print(f"{value.numerator}/{value.denominator} ({dec(value)})")
    return 0


def cmd_decompose(args) -> int:
    inst, _ = _load_instance(args.input)
    if args.search:
        result = best_offset(inst, args.mu)
        part = result.partition
        print(f"offset {part.offset} rest-cost {result.rest_cost}")
    else:
        part = strip_partition(inst, args.mu, args.offset)
        print(f"offset {part.offset}")
    print(f"spacing {part.spacing}")
    for strip in part.strips:
        members = " ".join(map(str, strip.shapes))
        print(f"strip [{strip.x_lo}, {strip.x_hi}] shapes {members}")
    print(f"rest {' '.join(map(str, part.rest)) if part.rest else '-'}")
    print(
        f"summary strips {len(part.strips)} striped-shapes "
        f"{sum(len(s.shapes) for s in part.strips)} rest-shapes {len(part.rest)}"
    )
    return 0


def cmd_bench(args) -> int:
    config = bench_mod.load_suite(_read(args.suite))
    rows = bench_mod.run_suite(config)
    sys.stdout.write(bench_mod.rows_to_csv(rows))
    if args.plot_dir:
        written = bench_mod.plot_rows(rows, args.plot_dir)
        for path in written:
            print(f"figure {path}", file=sys.stderr)
    return 0


def cmd_render(args) -> int:
    inst, _ = _load_instance(args.input)
    sol = read_solution(_read(args.solution)) if args.solution else None
    _write(args.output, render_svg(inst, sol))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stabkit",
        description="minimum-cost horizontal stabbing of stacked-rectangle shapes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit an instance file")
    g.add_argument("--type", choices=("random", "vc", "hitting-set"), default="random")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=4)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--x-max", type=int, default=8)
    g.add_argument("--y-max", type=int, default=8)
    g.add_argument("--hourglass", action="store_true")
    g.add_argument("--delta", type=_frac, default=None)
    g.add_argument("--graph", help="graph file for --type vc")
    g.add_argument("--sets", help="set-system file for --type hitting-set")
    g.add_argument("-o", "--output", default=None)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("--algo", choices=("exact", "greedy", "lp-scale", "ptas"), default="exact")
    s.add_argument("--eps", type=_frac, default=Fraction(1, 10), help="discretization eps")
    s.add_argument("--dp-eps", type=_frac, default=Fraction(1, 2), help="dp cell eps")
    s.add_argument("--add-cap", type=int, default=None)
    s.add_argument("--offset-sweep", action="store_true", help="try every distinct grid offset")
    s.add_argument("--stabber", choices=("exact", "greedy"), default="exact")
    s.add_argument("--budget", type=int, default=None, help="search node budget")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a solution against an instance")
    v.add_argument("-i", "--instance", required=True)
    v.add_argument("-s", "--solution", required=True)
    v.set_defaults(func=cmd_verify)

    lb = sub.add_parser("lowerbound", help="exact LP lower bound")
    lb.add_argument("-i", "--input", required=True)
    lb.set_defaults(func=cmd_lowerbound)

    d = sub.add_parser("decompose", help="strip partition with optional offset search")
    d.add_argument("-i", "--input", required=True)
    d.add_argument("--mu", type=_frac, required=True)
    d.add_argument("--offset", type=_frac, default=Fraction(0))
    d.add_argument("--search", action="store_true")
    d.set_defaults(func=cmd_decompose)

    b = sub.add_parser("bench", help="run a benchmark suite, CSV on stdout")
    b.add_argument("--suite", required=True)
    b.add_argument("--plot-dir", default=None, help="write summary figures here")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("render", help="draw instance (and solution) as SVG")
    r.add_argument("-i", "--input", required=True)
    r.add_argument("-s", "--solution", default=None)
    r.add_argument("-o", "--output", default=None)
    r.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, PtasError, DecomposeError, LpError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
