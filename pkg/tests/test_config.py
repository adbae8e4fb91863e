"""Tests for YAML run configurations."""

import pathlib

import pytest

from orlicz_reg.config import (
    COMMANDS,
    ConfigError,
    load_config,
    parse_config,
)
from orlicz_reg.phi import Family

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"


def base(**extra) -> dict:
    raw = {
        "phi": {
            "family": "double_phase",
            "params": {"p": 2.0, "q": 2.2},
            "coefficients": {"a": "abs(x1)"},
        },
        "domain": {"kind": "rect", "bounds": [[-1, 1], [-1, 1]]},
        "grid": {"n": 32},
        "boundary": "x1 + x2",
    }
    raw.update(extra)
    return raw


# =============================================================================
# Shipped configs
# =============================================================================


@pytest.mark.parametrize(
    "name, command",
    [
        ("check_power.yaml", "check"),
        ("check_double_phase.yaml", "check"),
        ("regularize.yaml", "regularize"),
        ("solve_1d.yaml", "solve"),
        ("compare.yaml", "compare"),
        ("holder.yaml", "holder"),
        ("sweep.yaml", "sweep"),
    ],
)
def test_shipped_configs_load(name, command):
    config = load_config(CONFIGS / name)
    config.require(command)


def test_solve_1d_contents():
    config = load_config(CONFIGS / "solve_1d.yaml")
    phi = config.build_phi()
    assert phi.family is Family.PERTURBED
    assert config.grid_n == 1024
    assert str(config.boundary_expression()) == "x1"
    assert config.output_dir == pathlib.Path("out/solve_1d")


# =============================================================================
# Parsing
# =============================================================================


class TestParse:

    def test_defaults(self):
        config = parse_config(base())
        assert config.seed == 0
        assert not config.svg
        assert config.check.r_grid == (0.016, 0.008, 0.004, 0.002)
        assert config.solve.tol_el == 1e-8
        assert config.holder.mode == "gradient"
        assert config.sweep is None

    def test_integers_become_floats(self):
        config = parse_config(base(check={"r_grid": [0.01, 0.005, 0.0025], "l_cap": 5}))
        assert config.check.l_cap == 5.0
        assert isinstance(config.check.l_cap, float)

    def test_domain_center(self):
        assert parse_config(base()).domain_center() == (0.0, 0.0)

    def test_sweep_points(self):
        config = parse_config({"sweep": {"points": [[2, 2.2, 1], [2, 3, None]]}})
        config.require("sweep")
        assert config.sweep.parsed_points() == [(2.0, 2.2, 1.0), (2.0, 3.0, None)]

    def test_require_lists_missing_sections(self):
        config = parse_config({"phi": base()["phi"], "domain": base()["domain"]})
        config.require("check")
        with pytest.raises(ConfigError, match="grid"):
            config.require("solve")

    def test_every_command_known(self):
        config = parse_config(base())
        for command in COMMANDS[:-1]:
            config.require(command)
        with pytest.raises(ConfigError):
            config.require("sweep")
        with pytest.raises(ConfigError):
            config.require("plot")


# =============================================================================
# Rejections
# =============================================================================


class TestReject:

    @pytest.mark.parametrize(
        "extra",
        [
            {"colour": "red"},
            {"grid": {"n": 8}},
            {"grid": {"n": 32, "m": 4}},
            {"grid": {"n": 32.5}},
            {"seed": "zero"},
            {"svg": "yes"},
            {"boundary": "x1 +"},
            {"check": {"tolerance": 1}},
            {"check": {"r_grid": [0.6]}},
            {"check": {"r_grid": [0.4], "r0": 0.3}},
            {"check": {"eps": 1.5}},
            {"check": {"ball_count": 12.5}},
            {"holder": {"mode": "hessian"}},
            {"regularize": {"verify": "no"}},
            {"domain": {"kind": "torus"}},
            {"domain": {"kind": "rect", "bounds": [[0, 1], [0]]}},
            {"sweep": {"points": []}},
            {"sweep": {"points": [[2, 3]]}},
            {"sweep": {"points": [[2, 3, 1]], "grid_n": 4}},
        ],
        ids=[
            "unknown-top-level",
            "grid-too-small",
            "grid-extra-key",
            "grid-not-integer",
            "seed-string",
            "svg-string",
            "boundary-syntax",
            "unknown-check-key",
            "radius-above-default-r0",
            "radius-above-r0",
            "eps-outside-unit",
            "ball-count-float",
            "holder-mode",
            "verify-string",
            "domain-kind",
            "bounds-shape",
            "sweep-empty",
            "sweep-short-point",
            "sweep-grid",
        ],
    )
    def test_rejected(self, extra):
        with pytest.raises(ConfigError):
            parse_config(base(**extra))

    def test_bad_phi_is_a_value_error(self):
        phi = {"family": "double_phase", "params": {"p": 3.0, "q": 2.0}, "coefficients": {"a": "1"}}
        raw = base(phi=phi)
        with pytest.raises(ValueError):
            parse_config(raw)

    def test_phi_dimension_mismatch(self):
        raw = base(phi={**base()["phi"], "dimension": 1})
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_not_a_mapping(self):
        with pytest.raises(ConfigError):
            parse_config(["phi"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("phi: [unclosed\n")
        with pytest.raises(ConfigError):
            load_config(path)
