"""Configuration parsing: defaults, strict keys, validation messages."""

import json

import numpy as np
import pytest

from tmtmag.config import ConfigError, parse_config


def test_minimal_config_applies_defaults(tmp_path):
    cfg = {
        "sensor": {"contrast": 0.2143, "n_ave": 0.196, "t2_star": 3.9e-6, "decay_power": 2.0},
        "plan": {"t_start": 0.97e-6, "t_stop": 1.75e-6, "repetitions": 25000},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    config = parse_config(path)
    assert config.sensor.n0 == pytest.approx(0.21952175617404938, abs=1e-9)
    assert config.sensor.n1 == pytest.approx(0.17247824382595062, abs=1e-9)
    assert config.plan.f_sample == 128e6
    assert config.plan.n_experiments == 200
    assert config.filter.basis == "bior6.8"
    assert config.filter.beta_grid[0] == -4.0
    assert config.filter.beta_grid[-1] == pytest.approx(2.0)
    assert config.output.formats == ["csv", "json"]
    assert not config.seed_explicit


def test_all_defaults_config():
    config = parse_config(None)
    assert config.experiment.delta_b == 2e-6
    assert config.omega_sense > config.sensor.omega_calib


def test_unknown_key_rejected_by_name():
    with pytest.raises(ConfigError, match="betta"):
        parse_config({"filter": {"betta": 1.0}})


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="sectionx"):
        parse_config({"sectionx": {}})


def test_inverted_photon_levels_rejected():
    with pytest.raises(ConfigError, match="n0 > n1"):
        parse_config({"sensor": {"n0": 0.17, "n1": 0.22}})


def test_explicit_levels_accepted():
    config = parse_config({"sensor": {"n0": 0.22, "n1": 0.17}})
    assert config.sensor.contrast == pytest.approx((0.22 - 0.17) / 0.22)
    assert config.sensor.n_ave == pytest.approx(0.195)
    with pytest.raises(ConfigError, match="together"):
        parse_config({"sensor": {"n0": 0.22}})
    with pytest.raises(ConfigError, match="inconsistent"):
        parse_config({"sensor": {"n0": 0.22, "n1": 0.17, "contrast": 0.5}})


def test_parse_error_reports_line():
    bad = '{\n  "sensor": {\n    "contrast": 0.2,,\n  }\n}'
    with pytest.raises(ConfigError, match="line 3"):
        parse_config(bad)


def test_beta_grid_forms():
    config = parse_config({"filter": {"beta_grid": [-2.0, -1.0, 0.0, 1.0]}})
    np.testing.assert_allclose(config.filter.beta_grid, [-2.0, -1.0, 0.0, 1.0])
    config = parse_config({"filter": {"beta_grid": {"start": 0.0, "stop": 1.0, "step": 0.5}}})
    np.testing.assert_allclose(config.filter.beta_grid, [0.0, 0.5, 1.0])
    with pytest.raises(ConfigError, match="increasing"):
        parse_config({"filter": {"beta_grid": [1.0, 0.0, -1.0]}})
    with pytest.raises(ConfigError, match="beta_grid"):
        parse_config({"filter": {"beta_grid": {"start": 0.0, "stop": 1.0, "step": -1.0}}})


def test_invalid_choices_rejected():
    with pytest.raises(ConfigError, match="basis"):
        parse_config({"filter": {"basis": "nosuch"}})
    with pytest.raises(ConfigError, match="boundary"):
        parse_config({"filter": {"boundary": "mirror"}})
    with pytest.raises(ConfigError, match="mode"):
        parse_config({"experiment": {"mode": "explode"}})
    with pytest.raises(ConfigError, match="photon_stats"):
        parse_config({"experiment": {"photon_stats": "gaussian"}})
    with pytest.raises(ConfigError, match="format"):
        parse_config({"output": {"formats": ["yaml"]}})


def test_plan_validation_propagates():
    with pytest.raises(ConfigError, match="plan"):
        parse_config({"plan": {"t_start": 2e-6, "t_stop": 1e-6}})


def test_snapshot_is_complete():
    config = parse_config({"plan": {"seed": 99}})
    snap = config.snapshot
    assert snap["plan"]["seed"] == 99
    assert snap["sensor"]["n0"] == config.sensor.n0
    assert snap["filter"]["beta_grid"][0] == -4.0
    assert config.seed_explicit
    # snapshot is JSON-serializable
    json.dumps(snap)
