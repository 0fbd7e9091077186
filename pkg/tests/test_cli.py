import csv
import json

import numpy as np
import pytest

from copspline.cli import main
from copspline.copulas import CopulaModel
from copspline.io import read_samples_csv, write_marginal_grid, write_samples_csv


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "fgm.json").write_text('{"family": "fgm", "theta": 0.7}')
    (tmp_path / "indep.json").write_text('{"family": "independence"}')
    write_samples_csv(tmp_path / "data.csv", CopulaModel("fgm", theta=0.7).sample(300, seed=0),
                      header=["x", "y"])
    return tmp_path


def run(*argv):
    return main(["--quiet", *map(str, argv)])


class TestFit:
    def test_outputs(self, workspace):
        out = workspace / "fit"
        assert run("fit", workspace / "data.csv", "--grid", "3", "--lambda", "0.5",
                   "--marginals", workspace / "fgm.json", "--export-grid", "5",
                   "--out", out) == 0
        estimate = json.loads((out / "estimate.json").read_text())
        assert estimate["grid"] == {"intervals": [3, 3]} and len(estimate["alpha"]) == 16
        density = read_samples_csv(out / "density.csv")
        assert density.shape == (25, 3)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "fit" and len(manifest["inputs"]) == 2
        assert set(manifest) >= {"schema_version", "config", "seed", "version",
                                 "duration_seconds"}

    def test_byte_identical(self, workspace):
        args = ["fit", workspace / "data.csv", "--grid", "2,3", "--lambda", "0"]
        assert run(*args, "--out", workspace / "a") == 0
        assert run(*args, "--out", workspace / "b") == 0
        assert (workspace / "a" / "estimate.json").read_bytes() == \
            (workspace / "b" / "estimate.json").read_bytes()

    def test_lambda_needs_marginals(self, workspace):
        assert run("fit", workspace / "data.csv", "--out", workspace / "o") == 3

    def test_grid_directory_marginals(self, workspace):
        grid_dir = workspace / "grids"
        grid_dir.mkdir()
        write_marginal_grid(grid_dir / "p01.csv", (0, 1), np.ones((10, 10)))
        assert run("fit", workspace / "data.csv", "--grid", "2", "--marginals", grid_dir,
                   "--out", workspace / "o") == 0

    def test_grid_length_mismatch(self, workspace):
        assert run("fit", workspace / "data.csv", "--grid", "2,2,2", "--lambda", "0",
                   "--out", workspace / "o") == 3

    def test_bad_csv(self, workspace):
        (workspace / "bad.csv").write_text("1,2\n3,x\n")
        assert run("fit", workspace / "bad.csv", "--lambda", "0", "--out", workspace / "o") == 2

    def test_missing_file(self, workspace):
        assert run("fit", workspace / "nope.csv", "--lambda", "0", "--out", workspace / "o") == 2

    def test_solver_failure_exit_code(self, workspace):
        assert run("fit", workspace / "data.csv", "--grid", "4", "--lambda", "0",
                   "--max-iter", "1", "--out", workspace / "o") == 4


class TestSimulateEvaluate:
    def test_round_trip(self, workspace):
        sample = workspace / "sim" / "x.csv"
        assert run("simulate", "--model", workspace / "fgm.json", "--n", 50, "--seed", 3,
                   "--out", sample) == 0
        X = read_samples_csv(sample)
        np.testing.assert_array_equal(X, CopulaModel("fgm", theta=0.7).sample(50, seed=3))
        manifest = json.loads((workspace / "sim" / "x.csv.manifest.json").read_text())
        assert manifest["seed"] == 3

        assert run("fit", sample, "--grid", "2", "--lambda", "0", "--out",
                   workspace / "fit") == 0
        write_samples_csv(workspace / "pts.csv", [[0.5, 0.5], [0.1, 0.9]])
        report_path = workspace / "report.json"
        assert run("evaluate", "--estimate", workspace / "fit" / "estimate.json",
                   "--truth", workspace / "fgm.json", "--points", workspace / "pts.csv",
                   "--out", report_path) == 0
        report = json.loads(report_path.read_text())
        assert report["l2_error"] > 0 and len(report["densities"]) == 2
        assert (workspace / "report.densities.csv").exists()
        assert (workspace / "report.json.manifest.json").exists()

    def test_evaluate_needs_something(self, workspace):
        assert run("fit", workspace / "data.csv", "--grid", "2", "--lambda", "0",
                   "--out", workspace / "fit") == 0
        assert run("evaluate", "--estimate", workspace / "fit" / "estimate.json",
                   "--out", workspace / "r.json") == 3

    def test_evaluate_dimension_mismatch(self, workspace):
        assert run("fit", workspace / "data.csv", "--grid", "2", "--lambda", "0",
                   "--out", workspace / "fit") == 0
        (workspace / "g3.json").write_text('{"family": "independence", "d": 3}')
        assert run("evaluate", "--estimate", workspace / "fit" / "estimate.json",
                   "--truth", workspace / "g3.json", "--out", workspace / "r.json") == 3

    def test_invalid_model(self, workspace):
        (workspace / "bad.json").write_text('{"family": "fgm", "theta": 5}')
        assert run("simulate", "--model", workspace / "bad.json", "--n", 5,
                   "--out", workspace / "x.csv") == 3


class TestBenchmark:
    def test_outputs(self, workspace, monkeypatch):
        monkeypatch.setenv("COPSPLINE_THREADS", "1")
        out = workspace / "bench"
        assert run("benchmark", "--model", workspace / "fgm.json", "--ns", "40,80",
                   "--reps", 2, "--grid", "2", "--lambdas", "0,1", "--seed", 9,
                   "--out", out) == 0
        with (out / "errors.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["n", "lambda", "rep", "l2_error", "runtime", "status"]
        assert len(rows) == 8 and all(r["status"] == "ok" for r in rows)
        with (out / "moment-error.csv").open() as fh:
            assert next(csv.reader(fh)) == ["n", "rep", "t", "sq_error"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 9 and manifest["config"]["workers"] == 1

    def test_seed_required(self, workspace):
        assert run("benchmark", "--model", workspace / "fgm.json", "--ns", "40",
                   "--out", workspace / "b") == 3


class TestParsing:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 2

    def test_bad_list(self, workspace):
        with pytest.raises(SystemExit) as info:
            main(["fit", str(workspace / "data.csv"), "--grid", "a,b", "--out", "x"])
        assert info.value.code == 2

    def test_json_logs(self, workspace, capsys):
        assert main(["--json-logs", "fit", str(workspace / "data.csv"), "--grid", "2",
                     "--lambda", "0", "--out", str(workspace / "o")]) == 0
        line = capsys.readouterr().err.strip().splitlines()[-1]
        assert json.loads(line)["level"] == "INFO"

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
