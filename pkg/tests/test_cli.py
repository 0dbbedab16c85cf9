import contextlib
import io
import tempfile
import unittest
from pathlib import Path

from pushpull_sim.app import main
from pushpull_sim.network.topology import build_rgg, read_edge_list
from pushpull_sim.output.metrics_csv import HEADER, read_metrics_csv

SMALL = ["--set", "graph.M=12", "--set", "graph.radius=0.5", "--set", "sampling.S=4", "--set", "objective.d=4",
         "--set", "objective.n_local=30", "--set", "mixing.comm_nodes=4", "--set", "eta=2e-4"]


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def parse_lines(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line and not line.startswith("warning"))


def read_summary(path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestRunCommand(unittest.TestCase):
    def test_csv_is_reproducible(self):
        with tempfile.TemporaryDirectory() as tmp:
            first, second = Path(tmp) / "a.csv", Path(tmp) / "b.csv"
            for path in (first, second):
                code, out, _ = call("run", *SMALL, "--iters", "50", "--out", str(path))
                self.assertEqual(code, 0)
            self.assertEqual(first.read_bytes(), second.read_bytes())
            self.assertEqual(first.read_text().splitlines()[0], HEADER)
            self.assertEqual(parse_lines(out)["final_iter"], "50")

    def test_zero_iterations(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "zero.csv"
            code, _, _ = call("run", *SMALL, "--iters", "0", "--out", str(path))
            self.assertEqual(code, 0)
            self.assertEqual(len(path.read_text().splitlines()), 2)

    def test_config_error_exit_code(self):
        code, _, err = call("run", "--set", "graph.M=10", "--set", "sampling.S=11")
        self.assertEqual(code, 1)
        self.assertIn("sampling.S exceeds graph.M", err)

    def test_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg_path = Path(tmp) / "exp.cfg"
            cfg_path.write_text("graph.M=8\nsampling.S=2\nmixing.comm_nodes=2\ngraph.radius=0.6\nrecord_every=5\neta=1e-4\n")
            out_path = Path(tmp) / "m.csv"
            code, _, _ = call("run", "--config", str(cfg_path), "--iters", "20", "--out", str(out_path))
            self.assertEqual(code, 0)
            self.assertEqual([r.t for r in read_metrics_csv(out_path)], [0, 5, 10, 15, 20])

    def test_final_iteration_is_recorded(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "m.csv"
            code, out, _ = call("run", *SMALL, "--set", "record_every=10", "--iters", "25", "--out", str(path))
            self.assertEqual(code, 0)
            self.assertEqual(parse_lines(out)["final_iter"], "25")
            self.assertEqual([r.t for r in read_metrics_csv(path)], [0, 10, 20, 25])

    def test_exports_replay_the_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            code, out, _ = call("run", *SMALL, "--iters", "30", "--out", str(tmp / "a.csv"),
                                "--save-graph", str(tmp / "graph.txt"), "--save-dataset", str(tmp / "data.npz"))
            self.assertEqual(code, 0)
            values = parse_lines(out)
            self.assertEqual(values["graph"], str(tmp / "graph.txt"))
            self.assertEqual(values["dataset"], str(tmp / "data.npz"))
            self.assertEqual(read_edge_list(tmp / "graph.txt"), build_rgg(12, 0.5, 0))

            code, _, _ = call("run", *SMALL, "--iters", "30", "--out", str(tmp / "b.csv"),
                              "--set", f"objective.dataset={tmp / 'data.npz'}")
            self.assertEqual(code, 0)
            self.assertEqual((tmp / "a.csv").read_bytes(), (tmp / "b.csv").read_bytes())


class TestRateCommand(unittest.TestCase):
    def test_default_stepsize_passes(self):
        code, out, _ = call("rate", "--mu", "1", "--L", "1", "--M", "100", "--S", "20", "--lam", "0.9")
        values = parse_lines(out)
        self.assertEqual(code, 0)
        self.assertEqual(values["eta"], values["stepsize_bound"])
        self.assertEqual(values["vQ_le_rho_v"], "True")
        self.assertEqual(values["vq_nonpositive"], "True")
        self.assertNotIn("warning", out)

    def test_large_stepsize_warns(self):
        code, out, _ = call("rate", "--mu", "1", "--L", "1", "--M", "100", "--S", "20", "--lam", "0.9",
                            "--eta", "0.5")
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("warning:"))
        self.assertEqual(parse_lines(out)["vq_nonpositive"], "False")

    def test_csv_output(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rate.csv"
            call("rate", "--M", "10", "--S", "10", "--out", str(path))
            header, row = path.read_text().splitlines()
        self.assertTrue(header.startswith("stepsize_bound,eta,rho"))
        self.assertEqual(len(header.split(",")), len(row.split(",")))

    def test_invalid_params(self):
        code, _, _ = call("rate", "--M", "10", "--S", "20")
        self.assertEqual(code, 1)


class TestLambdaCommand(unittest.TestCase):
    def test_mean_mixing_is_zero(self):
        code, out, _ = call("lambda", *SMALL, "--set", "mixing.variant=mean", "--samples", "20")
        self.assertEqual(code, 0)
        self.assertEqual(parse_lines(out)["lambda"], "0")

    def test_broadcast_fails(self):
        code, _, _ = call("lambda", *SMALL, "--samples", "5")
        self.assertEqual(code, 2)


class TestSweepCommand(unittest.TestCase):
    def test_stepsize_values(self):
        values = ["1e-3", "5e-4", "2e-4", "1e-4"]
        with tempfile.TemporaryDirectory() as tmp:
            code, out, _ = call("sweep", *SMALL, "--set", "mixing.variant=fixed_metropolis", "--iters", "200",
                                "--set", "record_every=10", "--axis", "stepsize", "--values", ",".join(values),
                                "--jobs", "2", "--out", tmp)
            self.assertEqual(code, 0)
            self.assertEqual(parse_lines(out)["points"], "4")
            finals = [read_metrics_csv(Path(tmp) / f"stepsize_{k:02d}.csv")[-1].subopt for k in range(4)]
            lines = (Path(tmp) / "summary.csv").read_text().splitlines()
        header = lines[0].split(",")
        rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
        self.assertEqual(len(rows), 4)
        self.assertEqual(header[-1], "best")
        self.assertEqual([float(r["final_subopt"]) for r in rows], finals)
        best = [k for k, r in enumerate(rows) if r["best"] == "1"]
        self.assertEqual(best, [finals.index(min(finals))])

    def test_default_stepsizes_are_refined(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, out, _ = call("sweep", *SMALL, "--set", "mixing.variant=fixed_metropolis", "--iters", "150",
                                "--axis", "stepsize", "--out", tmp)
            self.assertEqual(code, 0)
            self.assertEqual(parse_lines(out)["points"], "8")
            rows = read_summary(Path(tmp) / "summary.csv")
        coarse = [float(r["value"]) for r in rows[:4]]
        self.assertEqual(coarse, [1e-2, 1e-3, 1e-4, 1e-5])
        best = min(rows[:4], key=lambda r: float(r["final_subopt"]))
        center = float(best["value"])
        self.assertEqual([float(r["value"]) for r in rows[4:]], [center * 2.0 ** k for k in (-2, -1, 1, 2)])

    def test_summary_costs_match_point_csvs(self):
        values = ["1e-3", "5e-4", "2e-4"]
        with tempfile.TemporaryDirectory() as tmp:
            code, _, _ = call("sweep", *SMALL, "--set", "mixing.variant=fixed_metropolis", "--iters", "300",
                              "--set", "record_every=5", "--axis", "stepsize", "--values", ",".join(values),
                              "--out", tmp)
            self.assertEqual(code, 0)
            rows = read_summary(Path(tmp) / "summary.csv")
            per_point = [read_metrics_csv(Path(tmp) / f"stepsize_{k:02d}.csv") for k in range(len(values))]

        for row, records in zip(rows, per_point):
            for label, th in (("1e-2", 1e-2), ("1e-3", 1e-3), ("1e-4", 1e-4)):
                hit = next((r for r in records if r.subopt <= th), None)
                expected = (str(hit.cum_comm), str(hit.cum_grads)) if hit else ("", "")
                self.assertEqual((row[f"comm_to_{label}"], row[f"grads_to_{label}"]), expected)

    def test_mixing_degree_axis(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, out, _ = call("sweep", *SMALL, "--iters", "20", "--axis", "mixing-degree", "--values", "1,3",
                                "--out", tmp)
            self.assertEqual(code, 0)
            self.assertEqual(parse_lines(out)["points"], "2")
            self.assertEqual([r["value"] for r in read_summary(Path(tmp) / "summary.csv")], ["1", "3"])

    def test_mixing_degree_needs_a_degree(self):
        for variant in ("mean", "fixed_metropolis"):
            with tempfile.TemporaryDirectory() as tmp:
                code, _, err = call("sweep", *SMALL, "--set", f"mixing.variant={variant}", "--iters", "5",
                                    "--axis", "mixing-degree", "--values", "1,2", "--out", tmp)
            self.assertEqual(code, 1)
            self.assertIn("has no degree", err)

    def test_default_sample_sizes_fit_small_networks(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, out, _ = call("sweep", *SMALL, "--iters", "5", "--axis", "sample-size", "--out", tmp)
            self.assertEqual(code, 0)
            self.assertEqual(parse_lines(out)["points"], "1")
            self.assertEqual([r["value"] for r in read_summary(Path(tmp) / "summary.csv")], ["10"])

    def test_failed_point_exit_code(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _, _ = call("sweep", *SMALL, "--set", "eta=auto", "--iters", "5", "--axis", "sample-size",
                              "--values", "2,3", "--out", tmp)
        self.assertEqual(code, 2)


class TestValidateCommand(unittest.TestCase):
    def test_fixed_metropolis(self):
        code, out, _ = call("validate", *SMALL, "--set", "mixing.variant=fixed_metropolis", "--rounds", "3")
        values = parse_lines(out)
        self.assertEqual(code, 0)
        self.assertEqual(values["doubly_stochastic"], "True")
        self.assertEqual(values["strongly_connected"], "True")

    def test_broadcast_is_usable_but_not_doubly_stochastic(self):
        code, out, _ = call("validate", *SMALL, "--rounds", "5")
        values = parse_lines(out)
        self.assertEqual(code, 0)
        self.assertEqual(values["row_stochastic_A"], "True")
        self.assertEqual(values["col_stochastic_B"], "True")
        self.assertEqual(values["doubly_stochastic"], "False")


if __name__ == '__main__':
    unittest.main()
