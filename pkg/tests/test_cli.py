import json
from fractions import Fraction as F

import pytest

from stabkit.bench import plot_rows, rows_to_csv, run_suite
from stabkit.cli import main
from stabkit.geometry import Instance, Solution, kshape, rect, segment
from stabkit.instance_io import (
    graph,
    read_instance,
    read_solution,
    vc_to_stabbing,
    write_graph,
    write_instance,
    write_solution,
)
from stabkit.render import dec, render_svg, shape_outline


@pytest.fixture
def square_file(tmp_path):
    inst = Instance((kshape([rect(0, 1, 0, 1)]),), 1)
    path = tmp_path / "square.json"
    path.write_text(write_instance(inst))
    return path


class TestSolvePipeline:
    def test_generate_solve_verify(self, tmp_path):
        inst_file = tmp_path / "inst.json"
        sol_file = tmp_path / "sol.json"
        assert main(["generate", "--seed", "4", "--count", "3", "--k", "2", "-o", str(inst_file)]) == 0
        assert main(["solve", "--algo", "exact", "-i", str(inst_file), "-o", str(sol_file)]) == 0
        assert main(["verify", "-i", str(inst_file), "-s", str(sol_file)]) == 0

    def test_exact_solve_square(self, square_file, tmp_path):
        sol_file = tmp_path / "sol.json"
        assert main(["solve", "--algo", "exact", "-i", str(square_file), "-o", str(sol_file)]) == 0
        sol = read_solution(sol_file.read_text())
        assert sol.cost == 1

    def test_empty_solution_fails_verification(self, square_file, tmp_path, capsys):
        sol_file = tmp_path / "empty.json"
        sol_file.write_text(write_solution(Solution((), F(0))))
        assert main(["verify", "-i", str(square_file), "-s", str(sol_file)]) == 1
        out = capsys.readouterr().out
        assert "unstabbed 0" in out

    @pytest.mark.parametrize("algo", ["greedy", "lp-scale", "ptas"])
    def test_all_algorithms_verify(self, tmp_path, algo):
        inst_file = tmp_path / "inst.json"
        sol_file = tmp_path / f"{algo}.json"
        assert main(["generate", "--seed", "8", "--count", "4", "--k", "2", "-o", str(inst_file)]) == 0
        assert main(["solve", "--algo", algo, "-i", str(inst_file), "-o", str(sol_file)]) == 0
        assert main(["verify", "-i", str(inst_file), "-s", str(sol_file)]) == 0

    def test_greedy_verify_pipe_twenty_seeds(self, tmp_path):
        for seed in range(20):
            inst_file = tmp_path / f"i{seed}.json"
            sol_file = tmp_path / f"s{seed}.json"
            assert main(
                ["generate", "--seed", str(seed), "--count", "4", "--k", "3", "-o", str(inst_file)]
            ) == 0
            assert main(["solve", "--algo", "greedy", "-i", str(inst_file), "-o", str(sol_file)]) == 0
            assert main(["verify", "-i", str(inst_file), "-s", str(sol_file)]) == 0

    def test_ptas_offset_sweep(self, tmp_path, capsys):
        inst_file = tmp_path / "inst.json"
        sol_file = tmp_path / "sol.json"
        assert main(["generate", "--seed", "2", "--count", "2", "--k", "1", "-o", str(inst_file)]) == 0
        assert main(
            ["solve", "--algo", "ptas", "--offset-sweep", "-i", str(inst_file), "-o", str(sol_file)]
        ) == 0
        err = capsys.readouterr().err
        assert "offsets" in err and "lp-bound" in err
        assert main(["verify", "-i", str(inst_file), "-s", str(sol_file)]) == 0

    def test_usage_error_is_exit_2(self, tmp_path):
        assert main(["solve", "--algo", "bogus", "-i", "x"]) == 2

    def test_unreadable_file_is_exit_2(self):
        assert main(["solve", "--algo", "exact", "-i", "/nonexistent.json"]) == 2

    def test_parse_error_is_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        assert main(["render", "-i", str(bad), "-o", str(tmp_path / "x.svg")]) == 2

    def test_vc_generation_via_graph_file(self, tmp_path, capsys):
        gfile = tmp_path / "g.json"
        gfile.write_text(write_graph(graph(3, [(1, 2), (2, 3)])))
        out = tmp_path / "inst.json"
        assert main(["generate", "--type", "vc", "--graph", str(gfile), "-o", str(out)]) == 0
        inst, meta = read_instance(out.read_text())
        assert inst.n == 2 and meta is not None and meta.n == 3

    def test_lowerbound_prints_rational_and_decimal(self, tmp_path, capsys):
        g = graph(3, [(1, 2), (1, 3), (2, 3)])
        inst, meta = vc_to_stabbing(g)
        path = tmp_path / "k3.json"
        path.write_text(write_instance(inst, meta))
        assert main(["lowerbound", "-i", str(path)]) == 0
        out = capsys.readouterr().out
        assert out.strip() == "3/2 (1.5)"

    def test_decompose_output(self, tmp_path, capsys):
        inst_file = tmp_path / "inst.json"
        main(["generate", "--seed", "4", "--count", "3", "--k", "2", "-o", str(inst_file)])
        assert main(["decompose", "-i", str(inst_file), "--mu", "1/2", "--search"]) == 0
        out = capsys.readouterr().out
        assert "offset" in out and "strip" in out


class TestRender:
    def test_outline_of_l_shape(self):
        shape = kshape([rect(0, 1, 0, 1), rect(0, 3, 1, 2)])
        pts = shape_outline(shape)
        assert pts == [
            (0, 0),
            (1, 0),
            (1, 1),
            (3, 1),
            (3, 2),
            (0, 2),
        ]

    def test_single_square_svg_counts(self):
        inst = Instance((kshape([rect(0, 1, 0, 1)]),), 1)
        sol = Solution.of_segments([segment(0, 1, F(1, 2))])
        svg = render_svg(inst, sol)
        assert svg.count("<polygon") == 1
        assert svg.count("<line") == 1

    def test_without_solution_only_polygons(self):
        inst = Instance((kshape([rect(0, 1, 0, 1)]),), 1)
        svg = render_svg(inst)
        assert svg.count("<polygon") == 1 and "<line" not in svg

    def test_triangle_reduction_has_three_polygons(self):
        inst, _ = vc_to_stabbing(graph(3, [(1, 2), (1, 3), (2, 3)]))
        svg = render_svg(inst)
        assert svg.count("<polygon") == 3

    def test_bytes_deterministic(self, tmp_path):
        inst, _ = vc_to_stabbing(graph(3, [(1, 2), (2, 3)]))
        a = render_svg(inst)
        b = render_svg(inst)
        assert a == b
        out1, out2 = tmp_path / "a.svg", tmp_path / "b.svg"
        path = tmp_path / "inst.json"
        path.write_text(write_instance(inst))
        main(["render", "-i", str(path), "-o", str(out1)])
        main(["render", "-i", str(path), "-o", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_decimal_formatting(self):
        assert dec(F(1, 2)) == "0.5"
        assert dec(F(-3, 4)) == "-0.75"
        assert dec(F(1, 3)) == "0.333333"
        assert dec(F(2, 3)) == "0.666667"
        assert dec(F(5)) == "5"


class TestBench:
    def suite(self):
        return {
            "algorithms": ["exact", "greedy", "lp-scale"],
            "families": [
                {"id": "r", "type": "random", "seed": 1, "instances": 2, "count": 3, "k": 2},
                {"id": "v", "type": "vc", "seed": 2, "instances": 1, "vertices": 4},
            ],
        }

    def test_rows_and_ratios(self):
        rows = run_suite(self.suite())
        assert len(rows) == 9
        for row in rows:
            if row.ratio_vs_lp is not None:
                assert row.ratio_vs_lp >= 1
            if row.ratio_vs_exact is not None:
                assert row.ratio_vs_exact >= 1

    def test_csv_schema(self):
        rows = run_suite(self.suite())
        csv = rows_to_csv(rows)
        lines = csv.strip().split("\n")
        assert lines[0] == (
            "instance,n,k,algorithm,cost,lp_bound,exact_cost,ratio_vs_exact,ratio_vs_lp,wall_ms"
        )
        assert len(lines) == 10
        # sorted by (instance, algorithm)
        keys = [tuple(l.split(",")[:4]) for l in lines[1:]]
        assert keys == sorted(keys)

    def test_empty_suite_gives_header_only(self):
        csv = rows_to_csv(run_suite({"algorithms": ["exact"], "families": []}))
        assert csv.strip().split("\n") == [
            "instance,n,k,algorithm,cost,lp_bound,exact_cost,ratio_vs_exact,ratio_vs_lp,wall_ms"
        ]

    def test_deterministic_columns(self):
        a = rows_to_csv(run_suite(self.suite()))
        b = rows_to_csv(run_suite(self.suite()))
        strip_time = lambda text: [l.rsplit(",", 1)[0] for l in text.splitlines()]
        assert strip_time(a) == strip_time(b)

    def test_plots_written(self, tmp_path):
        rows = run_suite(self.suite())
        written = plot_rows(rows, tmp_path / "figs")
        assert [p.name for p in written] == ["ratio_by_algorithm.png", "cost_vs_lp.png"]
        assert all(p.stat().st_size > 0 for p in written)

    def test_cli_bench_csv_on_stdout(self, tmp_path, capsys):
        suite_file = tmp_path / "suite.json"
        suite_file.write_text(json.dumps(self.suite()))
        assert main(["bench", "--suite", str(suite_file)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("instance,n,k,algorithm")
