"""Geometric mapping between segment configuration and the four tendon runs.

Sign convention: negative displacement = tendon pulled in (shortened). The
four routing angles are evenly spaced, so displacements come in antagonistic
pairs: q1 + q3 = 0 and q2 + q4 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentActuationError, InfeasibleConfigError, SingularConfigurationError
from .pcc import SegmentConfig, segment_tip_displacement

DEFAULT_ROUTING_RADIUS = 0.02
PAIR_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TendonGeometry:
    """Routing geometry of the four tendons around the backbone."""

    routing_radius: float = DEFAULT_ROUTING_RADIUS
    tendon_spacing: float = np.pi / 2
    tendon_count: int = 4

    def __post_init__(self):
        if self.routing_radius <= 0.0:
            raise ValueError("routing_radius must be positive")
        if self.tendon_count != 4 or self.tendon_spacing != np.pi / 2:
            raise ValueError("only the 4-tendon, pi/2-spaced design is supported")

    @property
    def angles(self) -> np.ndarray:
        return self.tendon_spacing * np.arange(self.tendon_count)


@dataclass(frozen=True)
class TendonState:
    """Per-segment tendon displacements, absolute lengths and measured tensions."""

    displacements: np.ndarray
    lengths: np.ndarray
    tensions: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.displacements, dtype=float).reshape(4)
        l = np.asarray(self.lengths, dtype=float).reshape(4)
        t = np.asarray(self.tensions, dtype=float).reshape(4)
        object.__setattr__(self, "displacements", d)
        object.__setattr__(self, "lengths", l)
        object.__setattr__(self, "tensions", t)
        if np.any(l <= 0.0):
            raise ValueError("tendon lengths must be positive")
        if np.any(t < 0.0):
            raise ValueError("tensions must be non-negative")
        if abs(d[0] + d[2]) > PAIR_TOLERANCE or abs(d[1] + d[3]) > PAIR_TOLERANCE:
            raise ValueError("displacements violate antagonistic pairing")


def tendon_lengths(cfg: SegmentConfig, geom: TendonGeometry) -> np.ndarray:
    """Lengths of the four tendon runs through one segment."""
    lengths = cfg.length - cfg.alpha * geom.routing_radius * np.cos(cfg.beta + geom.angles)
    if np.any(lengths <= 0.0):
        raise InfeasibleConfigError(
            f"alpha={cfg.alpha} with r={geom.routing_radius} yields non-positive tendon length")
    return lengths


def actuation_from_config(cfg: SegmentConfig, geom: TendonGeometry) -> np.ndarray:
    """Tendon displacements from straight-arm lengths (negative = pulled)."""
    return -cfg.alpha * geom.routing_radius * np.cos(cfg.beta + geom.angles)


def config_from_actuation(q: np.ndarray, geom: TendonGeometry, length: float,
                          pair_tol: float = PAIR_TOLERANCE) -> SegmentConfig:
    """Invert actuation_from_config. Straight arm maps to (alpha=0, beta=0)."""
    q = np.asarray(q, dtype=float).reshape(4)
    if abs(q[0] + q[2]) > pair_tol or abs(q[1] + q[3]) > pair_tol:
        raise InconsistentActuationError(
            f"pair sums ({q[0] + q[2]:.3g}, {q[1] + q[3]:.3g}) exceed {pair_tol}")
    # q1 = -alpha r cos(beta), q2 = alpha r sin(beta)
    ar = float(np.hypot(q[0], q[1]))
    if ar == 0.0:
        return SegmentConfig(0.0, 0.0, length)
    beta = float(np.arctan2(q[1], -q[0]))
    alpha = ar / geom.routing_radius
    return SegmentConfig(alpha, beta, length, alpha_max=max(np.pi / 2, alpha))


def actuation_jacobian(cfg: SegmentConfig, geom: TendonGeometry) -> np.ndarray:
    """4x2 Jacobian mapping (alpha_dot, beta_dot) to tendon displacement rates."""
    ang = cfg.beta + geom.angles
    r = geom.routing_radius
    return np.column_stack([-r * np.cos(ang), r * cfg.alpha * np.sin(ang)])


def _tip_raw(alpha: float, beta: float, length: float) -> np.ndarray:
    from .pcc import _arc_xyz

    radial, axial = _arc_xyz(alpha, length)
    return np.array([radial * np.cos(beta), radial * np.sin(beta), axial])


def _tip_jacobian(cfg: SegmentConfig, h: float = 1e-7) -> np.ndarray:
    """3x2 central-difference Jacobian of the tip displacement wrt (alpha, beta)."""
    J = np.empty((3, 2))
    for j, (da, db) in enumerate(((h, 0.0), (0.0, h))):
        hi = _tip_raw(cfg.alpha + da, cfg.beta + db, cfg.length)
        lo = _tip_raw(cfg.alpha - da, cfg.beta - db, cfg.length)
        J[:, j] = (hi - lo) / (2.0 * h)
    return J


def instantaneous_actuation(cfg: SegmentConfig, delta_tip: np.ndarray,
                            geom: TendonGeometry,
                            alpha_min: float = 1e-3) -> np.ndarray:
    """Tendon displacement increment produced by a small tip displacement.

    Undefined when the segment is (nearly) straight: the tip-to-configuration
    differential is singular there.
    """
    if cfg.alpha < alpha_min:
        raise SingularConfigurationError(
            f"alpha={cfg.alpha} below {alpha_min}; tip differential is singular")
    delta_tip = np.asarray(delta_tip, dtype=float).reshape(3)
    delta_lambda, *_ = np.linalg.lstsq(_tip_jacobian(cfg), delta_tip, rcond=None)
    return actuation_jacobian(cfg, geom) @ delta_lambda


def section_actuation(segment_displacements: list[np.ndarray]) -> np.ndarray:
    """Motor-side displacement of the four full-length tendons: sum over segments."""
    return np.sum(np.asarray(segment_displacements, dtype=float), axis=0)
