"""Simulated tip IMU and tendon tension sensors, plus the IMU-assisted
configuration estimator.

The estimator is the interesting part: tendon displacements alone imply a
configuration that goes wrong under tip loading (the tendons don't know the
arm sagged). One tip IMU adds two orientation constraints, which is exactly
enough to fit a uniform bend-scaling factor and a common bending-plane
offset on top of the actuation-implied shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentMeasurementError
from .pcc import ArmConfig, RigidPose, SegmentConfig, canonical_segment, end_effector_world_pose
from .rotations import matrix_to_euler_zyx, wrap_angle
from .tendon import TendonGeometry, config_from_actuation


@dataclass(frozen=True)
class NoiseModel:
    """Constant bias + seeded Gaussian noise per channel."""

    bias: np.ndarray
    sigma: np.ndarray
    seed: int = 0

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.bias, dtype=float))
        s = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if np.any(s < 0.0):
            raise ValueError("sigma must be non-negative")
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "sigma", s)

    @staticmethod
    def quiet(channels: int, seed: int = 0) -> "NoiseModel":
        return NoiseModel(np.zeros(channels), np.zeros(channels), seed)


@dataclass(frozen=True)
class ImuReading:
    roll: float
    pitch: float
    yaw: float
    angular_rate: np.ndarray
    timestamp: float


@dataclass(frozen=True)
class TensionReading:
    tensions: np.ndarray
    timestamp: float


@dataclass
class ImuSensor:
    """Tip-mounted attitude sensor: Z-Y-X Euler angles of the tip rotation."""

    noise: NoiseModel = field(default_factory=lambda: NoiseModel.quiet(6))
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.noise.bias.size != 6:
            raise ValueError("IMU noise model needs 6 channels (rpy + rates)")
        self._rng = np.random.default_rng(self.noise.seed)

    def sample(self, tip_pose: RigidPose, angular_rate: np.ndarray,
               timestamp: float) -> ImuReading:
        roll, pitch, yaw = matrix_to_euler_zyx(tip_pose.rotation)
        raw = np.concatenate([[roll, pitch, yaw], np.asarray(angular_rate, dtype=float)])
        noisy = raw + self.noise.bias + self.noise.sigma * self._rng.standard_normal(6)
        return ImuReading(wrap_angle(noisy[0]), wrap_angle(noisy[1]), wrap_angle(noisy[2]),
                          noisy[3:], timestamp)


@dataclass
class TensionSensor:
    """Tendon load cells; slack tendons read zero (the observable slack signature)."""

    noise: NoiseModel = field(default_factory=lambda: NoiseModel.quiet(4))
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.noise.bias.size != 4:
            raise ValueError("tension noise model needs 4 channels")
        self._rng = np.random.default_rng(self.noise.seed)

    def sample(self, forces: np.ndarray, timestamp: float) -> TensionReading:
        raw = np.asarray(forces, dtype=float).reshape(4)
        noisy = raw + self.noise.bias + self.noise.sigma * self._rng.standard_normal(4)
        return TensionReading(np.maximum(noisy, 0.0), timestamp)


def _tip_rp(delta: np.ndarray, lengths: np.ndarray) -> tuple[float, float]:
    from . import _kernels

    R, _ = _kernels.chain_pose(delta, lengths)
    roll, pitch, _ = matrix_to_euler_zyx(R)
    return roll, pitch


def config_from_imu(imu: ImuReading, actuation: list[np.ndarray],
                    geom: TendonGeometry, lengths: np.ndarray,
                    alpha_max: float = np.pi / 2) -> ArmConfig:
    """Actuation-implied configuration corrected to match the IMU roll/pitch.

    Fits a single bend-scaling factor and a common bending-plane offset
    (one IMU only constrains two orientation angles, so anything richer is
    unobservable). Yaw is ignored: the joints transmit no twist.
    """
    lengths = np.asarray(lengths, dtype=float).ravel()
    n = lengths.size
    base = [config_from_actuation(np.asarray(a, dtype=float), geom, lengths[s])
            for s, a in enumerate(actuation)]
    alphas = np.array([c.alpha for c in base])
    betas = np.array([c.beta for c in base])

    roll_m, pitch_m = imu.roll, imu.pitch
    # measured total bend angle: R33 of Rz(yaw)Ry(pitch)Rx(roll) is cos(pitch)cos(roll)
    theta_m = float(np.arccos(np.clip(np.cos(pitch_m) * np.cos(roll_m), -1.0, 1.0)))
    if theta_m > n * alpha_max + 1e-9:
        raise InconsistentMeasurementError(
            f"IMU bend {theta_m:.3f} rad exceeds geometric maximum {n * alpha_max:.3f}")

    total = float(alphas.sum())
    if total < 1e-9:
        # commanded straight: nothing to scale, spread the measured bend evenly
        if theta_m < 1e-9:
            return ArmConfig(tuple(base))
        beta_m = float(np.arctan2(-np.sin(roll_m), np.sin(pitch_m)))
        alphas = np.full(n, theta_m / n)
        betas = np.full(n, beta_m)
        scale0, off0 = 1.0, 0.0
    else:
        scale0, off0 = theta_m / total, 0.0

    x = np.array([scale0, off0])
    target = np.array([roll_m, pitch_m])
    h = 1e-7

    def res(v):
        delta = np.empty(2 * n)
        delta[0::2] = alphas * v[0]
        delta[1::2] = betas + v[1]
        r, p = _tip_rp(delta, lengths)
        return np.array([r - target[0], p - target[1]])

    for _ in range(25):
        f = res(x)
        if np.max(np.abs(f)) < 1e-12:
            break
        J = np.empty((2, 2))
        for j in range(2):
            dp = x.copy(); dp[j] += h
            dm = x.copy(); dm[j] -= h
            J[:, j] = (res(dp) - res(dm)) / (2.0 * h)
        JtJ = J.T @ J + 1e-12 * np.eye(2)
        dx = np.linalg.solve(JtJ, J.T @ f)
        x = x - dx
        x[0] = min(max(x[0], 0.0), (n * alpha_max) / max(total, 1e-12))

    segs = []
    for a, b, L in zip(alphas, betas, lengths):
        c = canonical_segment(a * x[0], b + x[1], L, alpha_max=alpha_max)
        if c.alpha > alpha_max:
            c = SegmentConfig(alpha_max, c.beta, L, alpha_max=alpha_max)
        segs.append(c)
    return ArmConfig(tuple(segs))


def estimate_ee_pose(uav_pose: RigidPose, mount: RigidPose,
                     corrected: ArmConfig) -> RigidPose:
    """World end-effector pose from the (IMU-corrected) configuration estimate."""
    return end_effector_world_pose(uav_pose, mount, corrected)
