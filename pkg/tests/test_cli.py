import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dualnmf import cli
from dualnmf.io import read_matrix, write_matrix


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def exact_input(tmp_path):
    path = tmp_path / "V.csv"
    assert run("synth", "--p", 30, "--n", 20, "--rank", 3, "--noise", "none",
               "--seed", 5, "--out", path) == 0
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestFactorize:
    def test_recovers_exact_rank(self, exact_input, tmp_path, capsys):
        code = run("factorize", "--input", exact_input, "--rank", 3, "--alpha", 1,
                   "--delta", 1e-10, "--max-iters", 5000, "--restarts", 3,
                   "--convergence", "rel", "--out", tmp_path / "out")
        assert code == 0
        line = capsys.readouterr().out.strip()
        r2 = float(line.split("r_squared=")[1])
        assert r2 >= 0.999
        for name in ("W.csv", "H.csv", "trace.csv", "manifest.json"):
            assert (tmp_path / "out" / name).exists()

    def test_rank_zero_is_usage_error(self, exact_input, tmp_path):
        assert run("factorize", "--input", exact_input, "--rank", 0,
                   "--out", tmp_path / "o") == cli.EXIT_USAGE

    def test_bad_delta(self, exact_input, tmp_path):
        assert run("factorize", "--input", exact_input, "--rank", 2, "--delta", 2,
                   "--out", tmp_path / "o") == cli.EXIT_USAGE

    def test_unsupported_alpha(self, exact_input, tmp_path):
        assert run("factorize", "--input", exact_input, "--rank", 2, "--alpha", 50,
                   "--out", tmp_path / "o") == cli.EXIT_USAGE

    def test_missing_flag(self):
        assert run("factorize", "--rank", 2) == cli.EXIT_USAGE

    def test_missing_input(self, tmp_path):
        assert run("factorize", "--input", tmp_path / "nope.csv", "--rank", 2,
                   "--out", tmp_path / "o") == cli.EXIT_INPUT

    def test_malformed_input(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2\n3,-4\n")
        assert run("factorize", "--input", bad, "--rank", 1,
                   "--out", tmp_path / "o") == cli.EXIT_INPUT

    def test_unwritable_output(self, exact_input, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        assert run("factorize", "--input", exact_input, "--rank", 2, "--max-iters", 3,
                   "--out", blocker / "sub") == cli.EXIT_WRITE

    def test_deterministic_outputs(self, exact_input, tmp_path):
        args = ["factorize", "--input", exact_input, "--rank", 3, "--alpha", 2.5,
                "--restarts", 2, "--max-iters", 100, "--seed", 9]
        assert run(*args, "--out", tmp_path / "a") == 0
        assert run(*args, "--out", tmp_path / "b") == 0
        for name in ("W.csv", "H.csv", "trace.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_verify(self, exact_input, tmp_path, capsys):
        out = tmp_path / "out"
        assert run("factorize", "--input", exact_input, "--rank", 3, "--max-iters", 50,
                   "--out", out) == 0
        assert run("verify", "--dir", out) == 0
        with open(exact_input, "a") as fh:
            fh.write("\n")
        assert run("verify", "--dir", out) == cli.EXIT_VERIFY
        assert "digest" in capsys.readouterr().out


class TestExitCodes:
    def test_table_is_distinct(self):
        codes = [cli.EXIT_OK, cli.EXIT_INTERNAL, cli.EXIT_USAGE, cli.EXIT_INPUT,
                 cli.EXIT_DEGENERATE, cli.EXIT_NONFINITE, cli.EXIT_ALL_FAILED,
                 cli.EXIT_CONSTANT, cli.EXIT_WRITE, cli.EXIT_VERIFY]
        assert len(set(codes)) == len(codes)

    def test_documented(self):
        for code in range(10):
            assert f"\n{code}  " in cli.__doc__

    def test_mapping(self):
        from dualnmf import errors as e
        assert cli.exit_code_for(e.DegenerateFactor("x")) == cli.EXIT_DEGENERATE
        assert cli.exit_code_for(e.NonFiniteResult("x")) == cli.EXIT_NONFINITE
        assert cli.exit_code_for(e.AllRestartsFailed([(0, "x")])) == cli.EXIT_ALL_FAILED
        assert cli.exit_code_for(e.ConstantMatrix("x")) == cli.EXIT_CONSTANT
        assert cli.exit_code_for(e.RaggedRows(2, 2, 1)) == cli.EXIT_INPUT

    def test_all_restarts_failed(self, tmp_path, monkeypatch):
        import dualnmf.factorizer as fz
        from dualnmf.errors import DegenerateFactor

        def dead(*a, **k):
            raise DegenerateFactor("dead column")

        monkeypatch.setattr(fz, "run_single", dead)
        inp = tmp_path / "V.csv"
        write_matrix(inp, np.ones((3, 3)))
        assert run("factorize", "--input", inp, "--rank", 1, "--restarts", 2,
                   "--out", tmp_path / "o") == cli.EXIT_ALL_FAILED


class TestSweep:
    def test_poisson_data(self, tmp_path):
        inp = tmp_path / "P.csv"
        assert run("synth", "--p", 20, "--n", 15, "--rank", 2, "--noise", "poisson",
                   "--level", 100, "--seed", 3, "--out", inp) == 0
        assert run("sweep", "--input", inp, "--rank", 2, "--alphas", "0,1,2,3",
                   "--delta", 1e-8, "--convergence", "rel", "--max-iters", 3000,
                   "--out", tmp_path / "s") == 0
        rows = read_csv(tmp_path / "s" / "sweep.csv")
        assert list(rows[0]) == ["alpha", "final_objective", "r_squared", "iterations", "converged"]
        assert [float(r["alpha"]) for r in rows] == [0, 1, 2, 3]
        assert all(r["converged"] == "true" for r in rows)

    def test_single_alpha_matches_factorize(self, exact_input, tmp_path, capsys):
        common = ["--input", exact_input, "--rank", 2, "--max-iters", 60, "--seed", 4]
        assert run("sweep", "--alphas", "1.5", *common, "--out", tmp_path / "s") == 0
        assert run("factorize", "--alpha", 1.5, *common, "--out", tmp_path / "f") == 0
        row = read_csv(tmp_path / "s" / "sweep.csv")[0]
        manifest = json.loads((tmp_path / "f" / "manifest.json").read_text())
        assert float(row["final_objective"]) == manifest["final_objective"]
        assert float(row["r_squared"]) == manifest["r_squared"]
        assert int(row["iterations"]) == manifest["iterations_used"]

    def test_duplicates_kept_in_order(self, exact_input, tmp_path):
        assert run("sweep", "--input", exact_input, "--rank", 2, "--alphas", "2,0.5,2",
                   "--max-iters", 20, "--out", tmp_path / "s") == 0
        rows = read_csv(tmp_path / "s" / "sweep.csv")
        assert [r["alpha"] for r in rows] == ["2.0", "0.5", "2.0"]
        assert rows[0] == rows[2]

    def test_failure_recorded_and_run_continues(self, exact_input, tmp_path):
        assert run("sweep", "--input", exact_input, "--rank", 2, "--alphas=0,99,1",
                   "--max-iters", 20, "--out", tmp_path / "s") == 0
        rows = read_csv(tmp_path / "s" / "sweep.csv")
        assert len(rows) == 3
        assert rows[1]["final_objective"] == "nan" and rows[1]["converged"] == "false"
        assert rows[2]["final_objective"] != "nan"


class TestCurve:
    def test_gaussian_values(self, tmp_path):
        out = tmp_path / "c.csv"
        assert run("curve", "--alphas", "0", "--mu-min", 0.5, "--mu-max", 2,
                   "--points", 3, "--out", out) == 0
        rows = read_csv(out)
        assert [float(r["mu"]) for r in rows] == pytest.approx([0.5, 1.0, 2.0], rel=1e-15)
        assert [float(r["divergence"]) for r in rows] == pytest.approx([0.125, 0.0, 0.5], abs=1e-15)

    def test_minimum_and_convexity(self, tmp_path):
        out = tmp_path / "c.csv"
        alphas = [-2, -1, 0, 0.5, 1, 1.5, 2, 3, 4]
        assert run("curve", f"--alphas={','.join(map(str, alphas))}", "--mu-min", 0.1,
                   "--mu-max", 10, "--points", 101, "--spacing", "linear", "--out", out) == 0
        rows = read_csv(out)
        assert list(rows[0]) == ["mu", "alpha", "divergence"]
        for a in alphas:
            mus = np.array([float(r["mu"]) for r in rows if float(r["alpha"]) == a])
            ds = np.array([float(r["divergence"]) for r in rows if float(r["alpha"]) == a])
            assert ds.min() >= 0
            assert np.argmin(ds) == np.argmin(np.abs(mus - 1.0))
            # equal spacing: discrete midpoint convexity
            assert np.all(ds[1:-1] <= 0.5 * (ds[:-2] + ds[2:]) + 1e-12)

    @pytest.mark.parametrize("lo, hi", [(0, 2), (-1, 2), (3, 2), (2, 2)])
    def test_bad_range(self, tmp_path, lo, hi):
        assert run("curve", "--alphas", "0", "--mu-min", lo, "--mu-max", hi,
                   "--out", tmp_path / "c.csv") == cli.EXIT_USAGE


class TestSynth:
    def test_exact_and_sidecar(self, tmp_path):
        out = tmp_path / "V.csv"
        assert run("synth", "--p", 8, "--n", 6, "--rank", 2, "--seed", 1, "--out", out) == 0
        truth = json.loads((tmp_path / "V.csv.truth.json").read_text())
        W, H = np.array(truth["W"]), np.array(truth["H"])
        assert W.shape == (8, 2) and H.shape == (2, 6)
        np.testing.assert_allclose(read_matrix(out), W @ H, rtol=1e-15)

    def test_poisson_integers(self, tmp_path):
        out = tmp_path / "V.csv"
        assert run("synth", "--p", 10, "--n", 10, "--rank", 2, "--noise", "poisson",
                   "--level", 5, "--out", out) == 0
        V = read_matrix(out)
        eps = 1e-12
        assert np.all((V == np.round(V)) | (V == eps))

    @pytest.mark.parametrize("noise", ["none", "gaussian", "poisson", "gamma", "invgauss"])
    def test_deterministic(self, tmp_path, noise):
        args = ["synth", "--p", 7, "--n", 5, "--rank", 2, "--noise", noise, "--seed", 12]
        assert run(*args, "--out", tmp_path / "a.csv") == 0
        assert run(*args, "--out", tmp_path / "b.csv") == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        V = read_matrix(tmp_path / "a.csv")
        assert V.min() >= 1e-12

    @pytest.mark.parametrize("noise, scale", [("gaussian", 0.5), ("gamma", 0.2), ("invgauss", 0.2)])
    def test_noise_is_mean_faithful(self, noise, scale):
        from dualnmf.synth import generate

        V, W, H = generate(200, 200, 2, noise=noise, noise_scale=scale, seed=0, level=30.0)
        ratio = V.mean() / (W @ H).mean()
        assert abs(ratio - 1) < 0.01

    def test_invalid_dimensions(self, tmp_path):
        assert run("synth", "--p", 0, "--n", 5, "--rank", 2,
                   "--out", tmp_path / "v.csv") == cli.EXIT_USAGE


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dualnmf", "curve", "--alphas", "1",
                           "--points", "5", "--out", str(tmp_path / "c.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "c.csv").exists()
