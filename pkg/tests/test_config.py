import numpy as np
import pytest

from aeroarm.config import (DEFAULT_CONFIG_TOML, SensorConfig, SimConfig,
                            config_from_dict, default_config_toml, load_config)


def test_defaults_match_documented_toml(cfg):
    """load_config(None) parses the documented TOML; both equal the dataclass defaults."""
    bare = SimConfig()
    assert cfg.dt_physics == bare.dt_physics == 1e-3
    assert cfg.dt_control == bare.dt_control == 2e-3
    assert cfg.substeps == 2
    assert cfg.seed == 0
    assert cfg.inertia.uav_mass == bare.inertia.uav_mass
    assert cfg.inertia.arm_damping == bare.inertia.arm_damping
    assert cfg.inertia.spring_k_eff == bare.inertia.spring_k_eff
    np.testing.assert_array_equal(cfg.inertia.segment_lengths,
                                  bare.inertia.segment_lengths)
    np.testing.assert_array_equal(cfg.uav_gains.K_pos, bare.uav_gains.K_pos)
    np.testing.assert_array_equal(cfg.arm_gains.K_adapt, bare.arm_gains.K_adapt)
    np.testing.assert_array_equal(cfg.arm_gains.K_adapt_pos, bare.arm_gains.K_adapt_pos)
    assert cfg.tension_loop == bare.tension_loop
    assert cfg.sensors == bare.sensors
    assert cfg.m_hat_init == bare.m_hat_init
    assert default_config_toml() == DEFAULT_CONFIG_TOML


def test_config_file_overrides(tmp_path):
    path = tmp_path / "custom.toml"
    path.write_text("""
[simulation]
dt_physics = 0.0005
dt_control = 0.002
seed = 7

[geometry]
segment_count = 3
segment_length = 0.08
routing_radius = 0.015

[inertia]
uav_mass = 2.0
spring_k_eff = 0.25

[uav_gains]
m_hat_init = 1.9

[arm_gains]
k_adapt = 555.0

[tension_loop]
enabled = false
tension_floor = 0.7

[sensors]
imu_correction = false
tendon_compliance = 1e-3
""")
    cfg = load_config(path)
    assert cfg.dt_physics == 5e-4 and cfg.substeps == 4
    assert cfg.seed == 7
    assert cfg.inertia.n == 3
    np.testing.assert_array_equal(cfg.inertia.segment_lengths, np.full(3, 0.08))
    assert cfg.geometry.routing_radius == 0.015
    assert cfg.inertia.uav_mass == 2.0
    assert cfg.inertia.spring_k_eff == 0.25
    assert cfg.m_hat_init == 1.9
    assert cfg.arm_gains.K_adapt[0, 0] == 555.0
    assert cfg.tension_loop_enabled is False
    assert cfg.tension_loop.tension_floor == 0.7
    assert cfg.sensors.imu_correction is False
    assert cfg.sensors.tendon_compliance == 1e-3


def test_partial_dict_falls_back_to_defaults():
    cfg = config_from_dict({"simulation": {"seed": 3}})
    assert cfg.seed == 3
    assert cfg.inertia.uav_mass == 1.2


def test_timestep_validation():
    with pytest.raises(ValueError):
        SimConfig(dt_physics=0.0)
    with pytest.raises(ValueError):
        SimConfig(dt_physics=2e-3, dt_control=1e-3)
    with pytest.raises(ValueError):
        SimConfig(dt_physics=1e-3, dt_control=2.5e-3)


def test_sensor_config_validation():
    with pytest.raises(ValueError):
        SensorConfig(imu_rate=0.0)
    with pytest.raises(ValueError):
        SensorConfig(tendon_compliance=-1e-4)
