import numpy as np
import pytest

from homsim.config import PRESETS, ConfigError, load_config, preset_text


def test_paper_preset():
    cfg = load_config()
    assert cfg.crystal.length_mm == 15 and cfg.crystal.cut_angle_deg == 67.8
    assert (cfg.pump.center_nm, cfg.pump.fwhm_nm) == (415, 2.3)
    assert cfg.signal.fwhm_nm == 9.3 and cfg.lo.fwhm_nm == 7.1
    assert cfg.source.lo_mean_photons == 0.02
    assert cfg.grid_points == 256
    np.testing.assert_allclose(cfg.positions_um, np.linspace(-150, 150, 41))


@pytest.mark.parametrize("name", PRESETS)
def test_every_preset_loads(name):
    assert load_config([name]).digest


def test_unknown_preset():
    with pytest.raises(ConfigError, match="unknown preset"):
        preset_text("nope")


def test_digest_tracks_content():
    a, b = load_config(), load_config()
    assert a.digest == b.digest
    assert load_config(overrides={"simulate": {"seed": 1}}).digest != a.digest


def test_user_file_layers(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[lo]\nfwhm_nm = 9.3\n[scan]\npositions_um = -10, 0, 10\n")
    cfg = load_config(config_path=path)
    assert cfg.lo.fwhm_nm == 9.3 and cfg.signal.fwhm_nm == 9.3
    np.testing.assert_allclose(cfg.positions_um, [-10, 0, 10])


@pytest.mark.parametrize("text, match", [
    ("[crystal]\nlength_mm = -1\n", "positive"),
    ("[crystal]\nmaterial = /no/such/file.ini\n", "/no/such/file.ini"),
    ("[jsa]\ngrid_points = 1\n", "invalid grid"),
    ("[jsa]\nmodel = gaussian\n", "jsa model"),
    ("[source]\npair_probability = 0.5\n", "pair probability"),
    ("[source]\nstatistics = poisson\n", "statistics"),
    ("[detectors]\nd1_efficiency = 2\n", "efficiency"),
    ("[signal]\nfwhm_nm = abc\n", "invalid configuration"),
    ("[scan]\npositions_um =\n", "empty"),
    ("[scan]\npoints = 0\n", "empty"),
    ("[simulate]\npulses = -5\n", "pulses"),
    ("not an ini file\n", "cannot parse"),
])
def test_validation(tmp_path, text, match):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises(ConfigError, match=match):
        load_config(config_path=path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="missing.ini"):
        load_config(config_path=tmp_path / "missing.ini")
