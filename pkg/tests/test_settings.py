"""Tests for grid specs and run configuration."""

import json
import math

import pytest
from mpmath import mpf

from app.errors import FatouError, ParseError
from app.settings import DEFAULT_SETTINGS, GridSpec, RunConfig, build_run_config, parse_anchor


class TestGridSpec:
    def test_geometric_points_decrease(self):
        points = GridSpec.parse("1e-3:1e-1:3").points()
        assert len(points) == 3
        assert points[0] > points[1] > points[2]
        assert abs(points[1] - mpf("0.01")) < mpf("1e-15")

    def test_linear_points(self):
        points = GridSpec.parse("0.3:0.1:3:lin").points()
        assert [float(p) for p in points] == pytest.approx([0.3, 0.2, 0.1])

    def test_text_form(self):
        assert str(GridSpec.parse("0.001:0.1:5:lin")) == "0.001:0.1:5:lin"

    @pytest.mark.parametrize("text", [
        "1e-2:1e-1",
        "0.5:0.1:4",
        "0.1:0.1:4",
        "1e-3:1e-1:1",
        "1e-3:1e-1:4:log",
        "a:b:c",
    ])
    def test_invalid(self, text):
        with pytest.raises(ParseError):
            GridSpec.parse(text)


class TestRunConfig:
    def test_anchor_text(self):
        assert parse_anchor("exp(-1)") == pytest.approx(math.exp(-1))
        assert parse_anchor("0.2") == 0.2

    def test_defaults(self):
        config = build_run_config()
        assert config.N == int(DEFAULT_SETTINGS["N"])
        assert config.orbit_blocks is None
        assert config.grid is None

    def test_precedence(self, tmp_path):
        """JSON config overrides defaults; explicit values override the file; None is ignored."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"N": 4, "tol": 1e-6, "anchor": "exp(-2)"}), encoding="utf-8")
        config = build_run_config(str(path), N=5, M=None)
        assert config.N == 5
        assert config.tol == 1e-6
        assert config.anchor == pytest.approx(math.exp(-2))
        assert config.M == int(DEFAULT_SETTINGS["M"])

    def test_grid_from_text(self):
        config = build_run_config(grid="1e-3:1e-1:4")
        assert isinstance(config.grid, GridSpec)
        assert config.grid.count == 4

    def test_bad_grid_text(self):
        with pytest.raises(ParseError):
            build_run_config(grid="1e-3")

    @pytest.mark.parametrize("overrides", [
        {"tol": 0},
        {"digits": 10},
        {"M": 0},
        {"anchor": 0.5},
        {"points": [0.9]},
        {"orbit_blocks": -1},
        {"command": "plot"},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(FatouError, match="invalid configuration"):
            build_run_config(**overrides)

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(FatouError, match="cannot read config file"):
            build_run_config(str(tmp_path / "missing.json"))

    def test_config_file_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(FatouError, match="JSON object"):
            build_run_config(str(path))

    def test_model_accepts_grid_instance(self):
        grid = GridSpec(start=0.01, stop=0.1, count=3)
        assert RunConfig(grid=grid).grid == grid
