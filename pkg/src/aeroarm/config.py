"""Simulation configuration: typed parameter blocks and TOML (de)serialization."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .control import ArmGains, TensionLoopParams, UavGains
from .dynamics import InertiaParams
from .pcc import DEFAULT_ALPHA_MAX
from .tendon import TendonGeometry

DEFAULT_CONFIG_TOML = """\
# Closed-loop simulation configuration. All units SI unless noted.

[simulation]
dt_physics = 0.001       # integrator step, s
dt_control = 0.002       # control period, s (must be an integer multiple of dt_physics)
seed = 0                 # master RNG seed (sensor streams derive from it)

[geometry]
segment_count = 5
segment_length = 0.05    # arc length per segment, m
routing_radius = 0.02    # tendon routing radius, m
alpha_max = 1.5707963267948966   # per-segment bend limit, rad

[inertia]
uav_mass = 1.2
uav_inertia_diag = [0.012, 0.012, 0.02]   # body-frame principal inertia, kg m^2
segment_mass = 0.0102    # lumped structural mass per segment, kg
spring_k_eff = 0.1       # effective straightening stiffness, N m/rad (per-spring, x4)
arm_damping = 5e-4       # viscous damping on arm coordinates, N m s/rad
gravity = 9.81
mount_offset = [0.0, 0.0, -0.04]   # arm base in the UAV body frame, m

[uav_gains]
k_pos = 1.5              # position sliding-surface gain (scalar -> isotropic)
c_pos = 4.0              # position reaching gain
lambda_m = 0.02          # mass-estimate adaptation rate
k_q = 8.0                # attitude sliding-surface gain
c_q = 0.6                # attitude reaching gain
m_hat_init = 1.251       # initial mass estimate, kg (vehicle + arm structure)
m_min = 0.3              # mass-estimate projection bounds, kg
m_max = 3.0

[arm_gains]
lam = 6.0                # task error-mixing gain
k_p = 120.0
k_v = 22.0
k_adapt = 800.0          # uncertainty-estimate adaptation gain, bend task
k_adapt_pos = 100.0      # uncertainty-estimate adaptation gain, tip position task
pinv_damping = 1e-6      # damped pseudo-inverse regularization

[tension_loop]
enabled = true
tension_floor = 0.5      # minimum commanded tension, N
tension_max = 35.0       # actuator limit, N (3.5 N m motor torque / 0.01 m spool)

[sensors]
imu_rate = 200.0         # tip IMU sample rate, Hz
tension_rate = 500.0     # tension sensor sample rate, Hz
imu_sigma_angle = 0.0    # IMU angle noise std, rad
imu_sigma_rate = 0.0     # IMU rate noise std, rad/s
tension_sigma = 0.0      # tension noise std, N
imu_correction = true    # enable the IMU-assisted configuration estimator
tendon_compliance = 5e-4 # elastic tendon stretch seen by motor encoders, m/N
"""


@dataclass(frozen=True)
class SensorConfig:
    imu_rate: float = 200.0
    tension_rate: float = 500.0
    imu_sigma_angle: float = 0.0
    imu_sigma_rate: float = 0.0
    tension_sigma: float = 0.0
    imu_correction: bool = True
    tendon_compliance: float = 5e-4

    def __post_init__(self):
        if self.imu_rate <= 0.0 or self.tension_rate <= 0.0:
            raise ValueError("sensor rates must be positive")
        if self.tendon_compliance < 0.0:
            raise ValueError("tendon_compliance must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    """Everything a scenario run needs, grouped by module."""

    dt_physics: float = 1e-3
    dt_control: float = 2e-3
    seed: int = 0
    geometry: TendonGeometry = field(default_factory=TendonGeometry)
    alpha_max: float = DEFAULT_ALPHA_MAX
    inertia: InertiaParams = field(default_factory=lambda: InertiaParams(arm_damping=5e-4))
    uav_gains: UavGains = field(default_factory=UavGains)
    arm_gains: ArmGains = field(default_factory=ArmGains)
    tension_loop: TensionLoopParams = field(default_factory=TensionLoopParams)
    tension_loop_enabled: bool = True
    sensors: SensorConfig = field(default_factory=SensorConfig)
    m_hat_init: float = 1.251
    pinv_damping: float = 1e-6

    def __post_init__(self):
        if self.dt_physics <= 0.0 or self.dt_control < self.dt_physics:
            raise ValueError("need 0 < dt_physics <= dt_control")
        ratio = self.dt_control / self.dt_physics
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("dt_control must be an integer multiple of dt_physics")

    @property
    def substeps(self) -> int:
        return int(round(self.dt_control / self.dt_physics))


def default_config_toml() -> str:
    """The documented default configuration as TOML text."""
    return DEFAULT_CONFIG_TOML


def config_from_dict(raw: dict) -> SimConfig:
    sim = raw.get("simulation", {})
    geo = raw.get("geometry", {})
    ine = raw.get("inertia", {})
    ug = raw.get("uav_gains", {})
    ag = raw.get("arm_gains", {})
    tl = raw.get("tension_loop", {})
    sn = raw.get("sensors", {})

    n = int(geo.get("segment_count", 5))
    seg_len = float(geo.get("segment_length", 0.05))
    geometry = TendonGeometry(routing_radius=float(geo.get("routing_radius", 0.02)))
    inertia = InertiaParams(
        uav_mass=float(ine.get("uav_mass", 1.2)),
        uav_inertia=np.diag(ine.get("uav_inertia_diag", [0.012, 0.012, 0.02])),
        segment_masses=np.full(n, float(ine.get("segment_mass", 0.0102))),
        segment_lengths=np.full(n, seg_len),
        spring_k_eff=float(ine.get("spring_k_eff", 0.1)),
        arm_damping=float(ine.get("arm_damping", 5e-4)),
        gravity=float(ine.get("gravity", 9.81)),
        mount_translation=np.asarray(ine.get("mount_offset", [0.0, 0.0, -0.04]), dtype=float),
    )
    uav_gains = UavGains(
        K_pos=float(ug.get("k_pos", 1.5)), C_pos=float(ug.get("c_pos", 4.0)),
        lambda_m=float(ug.get("lambda_m", 0.02)), K_q=float(ug.get("k_q", 8.0)),
        C_q=float(ug.get("c_q", 0.6)), m_min=float(ug.get("m_min", 0.3)),
        m_max=float(ug.get("m_max", 3.0)))
    arm_gains = ArmGains(
        Lambda=float(ag.get("lam", 6.0)), K_p=float(ag.get("k_p", 120.0)),
        K_v=float(ag.get("k_v", 22.0)), K_adapt=float(ag.get("k_adapt", 800.0)),
        K_adapt_pos=float(ag.get("k_adapt_pos", 100.0)))
    tension_loop = TensionLoopParams(
        tension_floor=float(tl.get("tension_floor", 0.5)),
        tension_max=float(tl.get("tension_max", 35.0)))
    sensors = SensorConfig(
        imu_rate=float(sn.get("imu_rate", 200.0)),
        tension_rate=float(sn.get("tension_rate", 500.0)),
        imu_sigma_angle=float(sn.get("imu_sigma_angle", 0.0)),
        imu_sigma_rate=float(sn.get("imu_sigma_rate", 0.0)),
        tension_sigma=float(sn.get("tension_sigma", 0.0)),
        imu_correction=bool(sn.get("imu_correction", True)),
        tendon_compliance=float(sn.get("tendon_compliance", 5e-4)))
    return SimConfig(
        dt_physics=float(sim.get("dt_physics", 1e-3)),
        dt_control=float(sim.get("dt_control", 2e-3)),
        seed=int(sim.get("seed", 0)),
        geometry=geometry,
        alpha_max=float(geo.get("alpha_max", DEFAULT_ALPHA_MAX)),
        inertia=inertia,
        uav_gains=uav_gains,
        arm_gains=arm_gains,
        tension_loop=tension_loop,
        tension_loop_enabled=bool(tl.get("enabled", True)),
        sensors=sensors,
        m_hat_init=float(ug.get("m_hat_init", 1.251)),
        pinv_damping=float(ag.get("pinv_damping", 1e-6)))


def load_config(path: str | Path | None = None) -> SimConfig:
    """Load a TOML config file; None gives the documented defaults."""
    if path is None:
        raw = tomllib.loads(DEFAULT_CONFIG_TOML)
    else:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    return config_from_dict(raw)
