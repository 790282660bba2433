import math

import pytest

from qbounce.config import RunConfig, config_hash, load_config, parse_config, serialize_config
from qbounce.errors import ConfigParseError, ConfigurationError
from qbounce.physics import CONSTANTS, WavePacketParams


def test_defaults_are_the_reference_setup():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.params == WavePacketParams()
    assert cfg.n_gqs == 12000
    assert cfg.m == CONSTANTS.hydrogen_mass


def test_units_and_comments():
    cfg = parse_config(
        """
        # comment line
        z0 = 0.5 mm      # trailing comment
        sigma_z = 400 nm
        v0 = -91.5 mm/s
        g = 9.8 m/s^2
        m = 1.00782503223 u
        snapshot_x = 0, 1 cm, 3 cm
        n_list = 10, 20
        """
    )
    assert cfg.z0 == pytest.approx(5e-4)
    assert cfg.sigma_z == pytest.approx(4e-7)
    assert cfg.v0 == pytest.approx(-0.0915)
    assert cfg.g == 9.8
    assert cfg.m == pytest.approx(CONSTANTS.hydrogen_mass, rel=1e-15)
    assert cfg.snapshot_x == pytest.approx((0.0, 0.01, 0.03))
    assert cfg.n_list == (10, 20)


@pytest.mark.parametrize(
    "text,line",
    [
        ("z0 = 1 mm\nbogus = 3", 2),
        ("z0 = 1 s", 1),
        ("z0 = 1 furlong", 1),
        ("z0 = abc", 1),
        ("z0 = 1 mm\n\nz0 = 2 mm", 3),
        ("just words", 1),
        ("N = 2.5", 1),
        ("z0 =", 1),
        ("g = inf", 1),
        ("z0 = 1 µm", 1),
    ],
)
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(ConfigParseError) as info:
        parse_config(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@pytest.mark.parametrize(
    "text",
    ["safety = 0.6", "sigma_z = 0 m", "d = 0.4", "family_points = 40", "M = 0", "reflection = 1.5", "snapshot_x = 1 m"],
)
def test_invalid_values(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_round_trip():
    cfg = parse_config("z0 = 0.7 mm\nseed = 12\nsnapshot_x = 0, 0.1\noutput_dir = results/a b")
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert serialize_config(again) == text
    assert text.isascii()


def test_hash_ignores_output_dir_only():
    a = parse_config("output_dir = x")
    b = parse_config("output_dir = y")
    c = parse_config("seed = 1")
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 64


def test_load_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("N = 200\n")
    assert load_config(p).N == 200
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.cfg")


def test_nan_rejected():
    with pytest.raises(ConfigParseError):
        parse_config("v0 = nan")
    assert not math.isnan(parse_config("v0 = 0").v0)
