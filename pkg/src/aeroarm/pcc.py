"""Piecewise-constant-curvature segment and chain kinematics.

A segment is a circular arc of length ``length`` bent by ``alpha`` radians in
the plane at azimuth ``beta``. Frames are right-handed; the local z-axis points
along the undeformed backbone. All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnreachablePointError
from .rotations import rot_y, rot_z

DEFAULT_ALPHA_MAX = np.pi / 2
DEFAULT_SEGMENT_COUNT = 5
DEFAULT_SEGMENT_LENGTH = 0.05

# Below this bend angle the closed-form arc displacement loses digits to
# cancellation; the sixth-order polynomial branch takes over.
ALPHA_SWITCH = 0.01


@dataclass(frozen=True)
class SegmentConfig:
    """One segment's joint-space coordinates: bend angle, plane azimuth, arc length."""

    alpha: float
    beta: float
    length: float
    alpha_max: float = DEFAULT_ALPHA_MAX

    def __post_init__(self):
        if not 0.0 <= self.alpha <= self.alpha_max:
            raise ValueError(f"alpha={self.alpha} outside [0, {self.alpha_max}]")
        if not -np.pi < self.beta <= np.pi:
            raise ValueError(f"beta={self.beta} outside (-pi, pi]")
        if self.length <= 0.0:
            raise ValueError(f"length={self.length} must be positive")


@dataclass(frozen=True)
class ArmConfig:
    """Ordered base-to-tip segment configurations."""

    segments: tuple[SegmentConfig, ...]

    def __post_init__(self):
        if len(self.segments) < 1:
            raise ValueError("arm needs at least one segment")
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def n(self) -> int:
        return len(self.segments)

    @staticmethod
    def straight(n: int = DEFAULT_SEGMENT_COUNT,
                 length: float = DEFAULT_SEGMENT_LENGTH) -> "ArmConfig":
        return ArmConfig(tuple(SegmentConfig(0.0, 0.0, length) for _ in range(n)))

    @staticmethod
    def uniform(alpha: float, beta: float, n: int = DEFAULT_SEGMENT_COUNT,
                length: float = DEFAULT_SEGMENT_LENGTH) -> "ArmConfig":
        return ArmConfig(tuple(SegmentConfig(alpha, beta, length) for _ in range(n)))


@dataclass(frozen=True)
class RigidPose:
    """Rotation + translation of one frame in another."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidPose":
        return RigidPose(np.eye(3), np.zeros(3))

    def validate(self, tol: float = 1e-9) -> None:
        R = self.rotation
        if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > tol:
            raise ValueError("rotation determinant is not +1")

    def matrix(self) -> np.ndarray:
        H = np.eye(4)
        H[:3, :3] = self.rotation
        H[:3, 3] = self.translation
        return H

    def compose(self, other: "RigidPose") -> "RigidPose":
        return RigidPose(self.rotation @ other.rotation,
                         self.translation + self.rotation @ other.translation)


def _arc_xyz(alpha: float, length: float) -> tuple[float, float]:
    """Radial and axial components of the arc-tip displacement (beta factored out)."""
    if abs(alpha) >= ALPHA_SWITCH:
        radial = length * (1.0 - np.cos(alpha)) / alpha
        axial = length * np.sin(alpha) / alpha
    else:
        a2 = alpha * alpha
        radial = length * alpha * (a2 * a2 - 30.0 * a2 + 360.0) / 720.0
        axial = length * (a2 * a2 - 20.0 * a2 + 120.0) / 120.0
    return radial, axial


def segment_tip_displacement(cfg: SegmentConfig) -> np.ndarray:
    """Tip position of a segment in its base frame, meters."""
    radial, axial = _arc_xyz(cfg.alpha, cfg.length)
    return np.array([radial * np.cos(cfg.beta), radial * np.sin(cfg.beta), axial])


def segment_config_from_tip(p: np.ndarray, length: float,
                            alpha_max: float = DEFAULT_ALPHA_MAX,
                            chord_tol: float = 1e-6) -> SegmentConfig:
    """Recover (alpha, beta) from a tip displacement reachable by an arc of ``length``.

    Raises UnreachablePointError when no constant-curvature arc of the given
    length passes through ``p`` (within ``chord_tol`` on the chord length).
    """
    p = np.asarray(p, dtype=float).reshape(3)
    norm = np.linalg.norm(p)
    if norm == 0.0:
        raise UnreachablePointError("zero tip displacement")
    ratio = abs(p[2]) / norm
    if ratio > 1.0 + 1e-12:
        raise UnreachablePointError(f"|z| exceeds ||p|| ({abs(p[2])} > {norm})")
    alpha = 2.0 * np.arccos(min(ratio, 1.0))
    if p[0] == 0.0 and p[1] == 0.0:
        beta = 0.0
    else:
        beta = float(np.arctan2(p[1], p[0]))
    half = 0.5 * alpha
    chord = length if half < 1e-8 else length * np.sin(half) / half
    if abs(norm - chord) > chord_tol:
        raise UnreachablePointError(
            f"chord {norm:.6g} inconsistent with arc length {length} (expect {chord:.6g})")
    return SegmentConfig(float(alpha), beta, length, alpha_max=max(alpha_max, alpha))


def segment_transform(cfg: SegmentConfig) -> RigidPose:
    """Base-to-tip transform: rotation Rz(beta) Ry(alpha) Rz(-beta), arc translation."""
    R = rot_z(cfg.beta) @ rot_y(cfg.alpha) @ rot_z(-cfg.beta)
    return RigidPose(R, segment_tip_displacement(cfg))


def compose_chain(arm: ArmConfig) -> list[RigidPose]:
    """Cumulative base-to-tip poses, one per segment; last entry is the arm tip."""
    poses = []
    cur = RigidPose.identity()
    for seg in arm.segments:
        cur = cur.compose(segment_transform(seg))
        poses.append(cur)
    return poses


def canonical_segment(alpha: float, beta: float, length: float,
                      alpha_max: float = DEFAULT_ALPHA_MAX) -> SegmentConfig:
    """Map raw (possibly negative-alpha, unwrapped-beta) coordinates to a valid config.

    (alpha, beta) and (-alpha, beta + pi) describe the same arc.
    """
    from .rotations import wrap_angle

    if alpha < 0.0:
        alpha, beta = -alpha, beta + np.pi
    return SegmentConfig(alpha, wrap_angle(beta), length,
                         alpha_max=max(alpha_max, alpha))


def end_effector_world_pose(uav_pose: RigidPose, mount: RigidPose,
                            arm: ArmConfig) -> RigidPose:
    """World pose of the arm tip: uav_pose * mount * chain."""
    return uav_pose.compose(mount).compose(compose_chain(arm)[-1])
