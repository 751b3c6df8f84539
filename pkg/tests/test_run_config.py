import json
from pathlib import Path

import pytest

from ladder.errors import ConfigError
from run_config import RunConfig, load_config, worker_count

ROOT = Path(__file__).resolve().parents[1]


def _write(tmp_path, payload, name="config.json"):
    target = tmp_path / name
    target.write_text(json.dumps(payload), encoding='utf-8')
    return target


def test_repository_config_matches_defaults():
    assert load_config(ROOT / "config.json") == RunConfig()


def test_defaults_build_reference_sequence():
    config = RunConfig()
    rb = config.ramsey_borde()
    assert rb.T == pytest.approx(12e-9)
    assert rb.T_prime == pytest.approx(10e-9)
    assert rb.T_doubleprime == pytest.approx(40e-9)
    assert rb.acceleration == 1e10
    assert config.laser_config().intensity_1 == pytest.approx(0.5e12)
    assert config.window_m() == pytest.approx((-150e-6, 150e-6))
    assert config.gaussian_init().width_w == 3e-6


def test_round_trip():
    config = RunConfig.from_dict({'sequence': {'T_ns': 8, 'acceleration_mps2': 0}, 'numerics': {'kbar_points': 128}})
    assert config.sequence.T_ns == 8.0
    assert isinstance(config.sequence.acceleration_mps2, float)
    assert config.numerics.kbar_points == 128
    assert config.laser.wavelength_nm == 1064.0
    assert RunConfig.from_dict(config.to_dict()) == config


def test_mean_velocity_becomes_momentum():
    config = RunConfig.from_dict({'wavepacket': {'mean_velocity_mps': 20.0}})
    assert config.gaussian_init().mean_momentum == pytest.approx(9.1093837e-31 * 20.0, rel=1e-7)


@pytest.mark.parametrize("payload, field", [
    ({'lasers': {}}, 'lasers'),
    ({'laser': {'colour': 'green'}}, 'laser.colour'),
    ({'laser': {'wavelength_nm': -1.0}}, 'laser.wavelength_nm'),
    ({'laser': {'wavelength_nm': 'red'}}, 'laser.wavelength_nm'),
    ({'laser': {'wavelength_nm': 1.0}}, 'laser.wavelength_nm'),
    ({'sequence': {'T_ns': -1.0}}, 'sequence.T_ns'),
    ({'sequence': {'T_ns': True}}, 'sequence.T_ns'),
    ({'numerics': {'kbar_points': 12.5}}, 'numerics.kbar_points'),
    ({'numerics': {'window_um': [10.0, -10.0]}}, 'numerics.window_um'),
    ({'analysis': {'pulse_rule': 'sudden'}}, 'analysis.pulse_rule'),
    ({'output': {'include_wall_time': 'yes'}}, 'output.include_wall_time'),
    ({'sweep': []}, 'sweep'),
])
def test_invalid_config(payload, field):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict(payload)
    assert info.value.field == field
    assert info.value.exit_code == 2
    assert info.value.to_dict()['field'] == field


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding='utf-8')
    with pytest.raises(ConfigError):
        load_config(broken)
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, [1, 2, 3]))


def test_worker_count(monkeypatch):
    monkeypatch.setenv('KDI_THREADS', '3')
    assert worker_count() == 3
    monkeypatch.setenv('KDI_THREADS', '0')
    assert worker_count() >= 1
    monkeypatch.delenv('KDI_THREADS')
    assert worker_count() >= 1
    for bad in ('many', '-2'):
        monkeypatch.setenv('KDI_THREADS', bad)
        with pytest.raises(ConfigError):
            worker_count()
