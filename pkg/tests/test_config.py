"""Tests for the flat experiment configuration"""

import json

import numpy as np
import pytest
from pytest import approx

from hypershield.config import (
    ConfigurationError,
    ExperimentConfig,
    dump_config,
    from_flat_dict,
    load_config,
)


def test_defaults_reproduce_the_cruise_study():
    """Nominal state, box half-widths and grid size"""
    config = ExperimentConfig()
    assert config.nominal.as_array().tolist() == [35_000.0, 2_500.0, 0.0, 12_000.0]
    assert (config.box.dh, config.box.dV) == (8_000.0, 800.0)
    assert config.box.dgamma == approx(np.deg2rad(5.0))
    assert config.grid.size == 9_702
    assert config.integrator.dt == 0.5
    assert config.learner.horizon == 400
    assert config.hard_margin == 1.0
    assert config.shielding


def test_flat_keys():
    """Nested settings are addressed with dotted keys"""
    flat = ExperimentConfig().to_flat_dict()
    assert flat["box.dh"] == 8_000.0
    assert flat["grid.h.bins"] == 21
    assert flat["learner.episodes"] == 500
    assert flat["hard.q_max"] == 80_000.0
    assert flat["seed"] == 0


def test_quantity_strings_are_converted():
    """Values with units are converted to SI"""
    config = from_flat_dict(
        {"box.dh": "6 km", "box.dgamma": "4 deg", "learner.episodes": 20, "grid.m.bins": 3}
    )
    assert config.box.dh == approx(6_000.0)
    assert config.box.dgamma == approx(np.deg2rad(4.0))
    assert config.learner.episodes == 20
    assert config.grid.m.bins == 3
    assert config.grid.h.bins == 21


@pytest.mark.parametrize(
    "flat",
    [
        {"box.width": 1.0},
        {"learner.episodes": 2.5},
        {"online_check": "yes"},
        {"hard.q_max": "fast"},
        {"learner.discount": 1.5},
        {"grid.h.bins": 0},
        {"hard_margin": -0.5},
    ],
)
def test_invalid_settings(flat):
    """Unknown keys and bad values are configuration errors"""
    with pytest.raises(ConfigurationError):
        from_flat_dict(flat)


def test_dump_and_load(tmp_path):
    """A dumped configuration loads with the same fingerprint"""
    config = from_flat_dict({"seed": 3, "online_check": True, "box.dV": "0.5 km/s"})
    fname = tmp_path / "config.json"
    dump_config(config, str(fname))
    loaded = load_config(str(fname))
    assert loaded == config
    assert loaded.fingerprint() == config.fingerprint()


def test_load_rejects_malformed_files(tmp_path):
    """Files must hold a json object"""
    fname = tmp_path / "config.json"
    fname.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_config(str(fname))
    fname.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_config(str(fname))


def test_viability_fingerprint_ignores_learning_settings():
    """Rewards, learner and seed do not invalidate a viability result"""
    config = ExperimentConfig()
    other = from_flat_dict({"rewards.w_imp": 10.0, "learner.episodes": 3, "seed": 9})
    assert other.fingerprint() != config.fingerprint()
    assert other.viability_fingerprint() == config.viability_fingerprint()

    tighter = from_flat_dict({"hard.q_max": 60_000.0})
    assert tighter.viability_fingerprint() != config.viability_fingerprint()

    wider = from_flat_dict({"hard_margin": 1.5})
    assert wider.viability_fingerprint() != config.viability_fingerprint()


def test_table_file_enters_the_viability_fingerprint(tmp_path):
    """Editing a table file changes the fingerprint"""
    fname = tmp_path / "tables.json"
    fname.write_text(json.dumps({"note": 1}), encoding="utf-8")
    config = from_flat_dict({"tables": str(fname)})
    before = config.viability_fingerprint()
    fname.write_text(json.dumps({"note": 2}), encoding="utf-8")
    assert config.viability_fingerprint() != before
