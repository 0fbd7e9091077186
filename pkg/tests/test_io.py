import json

import numpy as np
import pytest

from copspline.copulas import CopulaModel
from copspline.exceptions import ConfigurationError, DomainError, ParseError
from copspline.io import (file_digest, load_marginals, load_model, read_marginal_grid,
                          read_samples_csv, write_marginal_grid, write_samples_csv)
from copspline.penalty import GridMarginal


class TestSamplesCsv:
    def test_round_trip_is_exact(self, tmp_path, rng):
        X = rng.normal(size=(20, 3))
        write_samples_csv(tmp_path / "x.csv", X)
        np.testing.assert_array_equal(read_samples_csv(tmp_path / "x.csv"), X)

    def test_header_skipped(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n3,4\n")
        np.testing.assert_array_equal(read_samples_csv(tmp_path / "x.csv"), [[1, 2], [3, 4]])

    def test_bad_cell_named(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n3,oops\n")
        with pytest.raises(ParseError, match="row 3, column 2"):
            read_samples_csv(tmp_path / "x.csv")

    def test_ragged(self, tmp_path):
        (tmp_path / "x.csv").write_text("1,2\n3\n")
        with pytest.raises(ParseError, match="row 2"):
            read_samples_csv(tmp_path / "x.csv")

    def test_non_finite(self, tmp_path):
        (tmp_path / "x.csv").write_text("1,2\n3,nan\n")
        with pytest.raises(ParseError):
            read_samples_csv(tmp_path / "x.csv")

    def test_empty(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n")
        with pytest.raises(ParseError):
            read_samples_csv(tmp_path / "x.csv")


class TestModels:
    def test_load_model(self, tmp_path):
        (tmp_path / "m.json").write_text('{"family": "clayton", "theta": 2}')
        assert load_model(tmp_path / "m.json") == CopulaModel("clayton", theta=2.0)

    def test_invalid_json(self, tmp_path):
        (tmp_path / "m.json").write_text("{nope")
        with pytest.raises(ParseError):
            load_model(tmp_path / "m.json")

    def test_invalid_parameters(self, tmp_path):
        (tmp_path / "m.json").write_text('{"family": "fgm", "theta": 3}')
        with pytest.raises(DomainError):
            load_model(tmp_path / "m.json")


class TestMarginalGrids:
    def test_round_trip(self, tmp_path):
        grid = GridMarginal.from_model(CopulaModel("fgm", theta=0.5), resolution=20)
        write_marginal_grid(tmp_path / "g.csv", (0, 2), grid.values)
        assert (tmp_path / "g.csv").read_text().startswith("# pair=0,2 resolution=20\n")
        pair, again = read_marginal_grid(tmp_path / "g.csv")
        assert pair == (0, 2)
        np.testing.assert_array_equal(again.values, grid.values)

    def test_bad_header(self, tmp_path):
        (tmp_path / "g.csv").write_text("1,1\n1,1\n")
        with pytest.raises(ParseError):
            read_marginal_grid(tmp_path / "g.csv")

    def test_wrong_row_count(self, tmp_path):
        (tmp_path / "g.csv").write_text("# pair=0,1 resolution=3\n1,1,1\n1,1,1\n")
        with pytest.raises(ParseError):
            read_marginal_grid(tmp_path / "g.csv")

    def test_directory(self, tmp_path):
        for pair in [(0, 1), (0, 2), (1, 2)]:
            write_marginal_grid(tmp_path / ("p%d%d.csv" % pair), pair, np.ones((4, 4)))
        marginals = load_marginals(tmp_path)
        marginals.check_covers(3)

    def test_duplicate_pair(self, tmp_path):
        for name in ("a.csv", "b.csv"):
            write_marginal_grid(tmp_path / name, (0, 1), np.ones((4, 4)))
        with pytest.raises(ConfigurationError):
            load_marginals(tmp_path)

    def test_pairs_json(self, tmp_path):
        write_marginal_grid(tmp_path / "g.csv", (0, 1), np.ones((4, 4)))
        spec = {"pairs": [{"pair": [0, 1], "grid": "g.csv"},
                          {"pair": [0, 2], "model": {"family": "fgm", "theta": 0.2}},
                          {"pair": [1, 2], "model": {"family": "independence"}}]}
        (tmp_path / "m.json").write_text(json.dumps(spec))
        marginals = load_marginals(tmp_path / "m.json")
        assert isinstance(marginals.pairs[(0, 1)], GridMarginal)
        assert marginals.pairs[(0, 2)] == CopulaModel("fgm", theta=0.2)

    def test_pairs_json_mismatched_grid(self, tmp_path):
        write_marginal_grid(tmp_path / "g.csv", (1, 2), np.ones((4, 4)))
        (tmp_path / "m.json").write_text(json.dumps(
            {"pairs": [{"pair": [0, 1], "grid": "g.csv"}]}))
        with pytest.raises(ConfigurationError):
            load_marginals(tmp_path / "m.json")

    def test_model_json(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps(
            {"family": "gaussian", "rho": (0.5 + 0.5 * np.eye(3)).tolist()}))
        assert sorted(load_marginals(tmp_path / "m.json").pairs) == [(0, 1), (0, 2), (1, 2)]


def test_file_digest(tmp_path):
    (tmp_path / "a").write_text("hello")
    assert file_digest(tmp_path / "a") == \
        "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
