"""Coupled quadrotor + arm equations of motion, M(q)q̈ + Cq̇ + G + S = τ + τ_ext.

Generalized coordinates: UAV position (world), UAV Z-Y-X Euler angles, and
(alpha_s, beta_s) per segment, base to tip. Arm coordinates are *raw* here —
alpha may pass through zero and go negative, which is the same arc as
(-alpha, beta + pi); use pcc.canonical_segment to report them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import GimbalLockError, IntegrationFault
from .pcc import DEFAULT_SEGMENT_COUNT, DEFAULT_SEGMENT_LENGTH
from .rotations import euler_rate_matrix, euler_zyx_to_matrix, rot_x
from .tendon import TendonGeometry

PITCH_GUARD = 85.0 * np.pi / 180.0

# Table-driven structural mass per segment (disks, gimbals, shafts, springs).
DEFAULT_SEGMENT_MASS = 0.0102
DEFAULT_UAV_MASS = 1.2
DEFAULT_UAV_INERTIA = np.diag([0.012, 0.012, 0.02])


def _thin_rod_inertia(masses: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Principal inertia of each segment about its mid-arc frame (z = backbone)."""
    out = np.zeros((masses.size, 3))
    out[:, 0] = out[:, 1] = masses * lengths ** 2 / 12.0
    return out


@dataclass(frozen=True)
class InertiaParams:
    """Mass/inertia/elasticity description of the quadrotor and the arm."""

    uav_mass: float = DEFAULT_UAV_MASS
    uav_inertia: np.ndarray = field(default_factory=lambda: DEFAULT_UAV_INERTIA.copy())
    segment_masses: np.ndarray = field(
        default_factory=lambda: np.full(DEFAULT_SEGMENT_COUNT, DEFAULT_SEGMENT_MASS))
    segment_lengths: np.ndarray = field(
        default_factory=lambda: np.full(DEFAULT_SEGMENT_COUNT, DEFAULT_SEGMENT_LENGTH))
    segment_inertias: np.ndarray | None = None
    spring_k_eff: float = 0.1
    arm_damping: float = 0.0
    gravity: float = 9.81
    # The arm hangs below the UAV: rotate the arm frame upside down and offset it.
    mount_rotation: np.ndarray = field(default_factory=lambda: rot_x(np.pi))
    mount_translation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -0.04]))
    payload_mass: float = 0.0
    # Small diagonal regularizer keeping M invertible at the straight-arm
    # coordinate singularity (constant added inertia: still conservative).
    mass_regularizer: float = 1e-8

    def __post_init__(self):
        I_b = np.asarray(self.uav_inertia, dtype=float).reshape(3, 3)
        m = np.asarray(self.segment_masses, dtype=float).ravel()
        L = np.asarray(self.segment_lengths, dtype=float).ravel()
        if L.size != m.size:
            raise ValueError("segment_masses and segment_lengths disagree on n")
        iner = self.segment_inertias
        iner = _thin_rod_inertia(m, L) if iner is None else np.asarray(iner, dtype=float).reshape(m.size, 3)
        object.__setattr__(self, "uav_inertia", I_b)
        object.__setattr__(self, "segment_masses", m)
        object.__setattr__(self, "segment_lengths", L)
        object.__setattr__(self, "segment_inertias", iner)
        object.__setattr__(self, "mount_rotation",
                           np.asarray(self.mount_rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "mount_translation",
                           np.asarray(self.mount_translation, dtype=float).reshape(3))
        if self.uav_mass <= 0.0 or np.any(m <= 0.0):
            raise ValueError("masses must be positive")
        if np.max(np.abs(I_b - I_b.T)) > 1e-12 or np.any(np.linalg.eigvalsh(I_b) <= 0.0):
            raise ValueError("uav_inertia must be symmetric positive definite")
        if self.spring_k_eff < 0.0 or self.arm_damping < 0.0 or self.payload_mass < 0.0:
            raise ValueError("spring_k_eff, arm_damping and payload_mass must be >= 0")

    @property
    def n(self) -> int:
        return self.segment_masses.size

    @property
    def nq(self) -> int:
        return 6 + 2 * self.n

    def with_payload(self, payload_mass: float) -> "InertiaParams":
        return replace(self, payload_mass=payload_mass)

    def _kernel_args(self):
        return (self.segment_lengths, self.segment_masses, self.segment_inertias,
                self.uav_mass, self.uav_inertia, self.mount_rotation,
                self.mount_translation)


@dataclass(frozen=True)
class SystemState:
    """Full generalized coordinates and rates of the coupled system."""

    position: np.ndarray
    euler: np.ndarray
    arm: np.ndarray
    velocity: np.ndarray
    euler_rate: np.ndarray
    arm_rate: np.ndarray

    def __post_init__(self):
        for name, dim in (("position", 3), ("euler", 3), ("velocity", 3), ("euler_rate", 3)):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(dim))
        object.__setattr__(self, "arm", np.asarray(self.arm, dtype=float).ravel())
        object.__setattr__(self, "arm_rate", np.asarray(self.arm_rate, dtype=float).ravel())
        if self.arm.size % 2 != 0 or self.arm_rate.size != self.arm.size:
            raise ValueError("arm coordinates must be (alpha, beta) pairs with matching rates")
        if abs(self.euler[1]) >= np.pi / 2:
            raise GimbalLockError(f"pitch {self.euler[1]:.4f} at/beyond the Euler singularity")

    @staticmethod
    def rest(n: int = DEFAULT_SEGMENT_COUNT, position=(0.0, 0.0, 0.0)) -> "SystemState":
        z2n = np.zeros(2 * n)
        return SystemState(np.asarray(position, dtype=float), np.zeros(3), z2n.copy(),
                           np.zeros(3), np.zeros(3), z2n.copy())

    @property
    def q(self) -> np.ndarray:
        return np.concatenate([self.position, self.euler, self.arm])

    @property
    def qd(self) -> np.ndarray:
        return np.concatenate([self.velocity, self.euler_rate, self.arm_rate])

    @staticmethod
    def from_vectors(q: np.ndarray, qd: np.ndarray) -> "SystemState":
        q = np.asarray(q, dtype=float)
        qd = np.asarray(qd, dtype=float)
        return SystemState(q[:3], q[3:6], q[6:], qd[:3], qd[3:6], qd[6:])

    def uav_rotation(self) -> np.ndarray:
        return euler_zyx_to_matrix(*self.euler)

    def body_rates(self) -> np.ndarray:
        return euler_rate_matrix(self.euler[0], self.euler[1]) @ self.euler_rate


@dataclass(frozen=True)
class GeneralizedForces:
    """Actuation and external-disturbance generalized forces."""

    tau: np.ndarray
    tau_ext: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.tau, dtype=float).ravel()
        object.__setattr__(self, "tau", t)
        e = np.zeros_like(t) if self.tau_ext is None else np.asarray(self.tau_ext, dtype=float).ravel()
        if e.size != t.size:
            raise ValueError("tau and tau_ext must have the same dimension")
        object.__setattr__(self, "tau_ext", e)

    @staticmethod
    def none(nq: int) -> "GeneralizedForces":
        return GeneralizedForces(np.zeros(nq))

    def total(self) -> np.ndarray:
        return self.tau + self.tau_ext


def mass_matrix(state: SystemState, params: InertiaParams) -> np.ndarray:
    M, _ = _kernels.mass_and_gravity(state.q, *params._kernel_args(), params.gravity,
                                     params.payload_mass, params.mass_regularizer)
    return M


def gravity_vector(state: SystemState, params: InertiaParams) -> np.ndarray:
    _, G = _kernels.mass_and_gravity(state.q, *params._kernel_args(), params.gravity,
                                     params.payload_mass, params.mass_regularizer)
    return G


def coriolis_matrix(state: SystemState, params: InertiaParams) -> np.ndarray:
    dM = _kernels.mass_matrix_partials(state.q, *params._kernel_args(),
                                       params.payload_mass, params.mass_regularizer)
    return _kernels.coriolis_from_partials(dM, state.qd)


def spring_forces(state: SystemState, params: InertiaParams) -> np.ndarray:
    """S(q) + damping q̇: enters the left-hand side of the equations of motion."""
    return _kernels.spring_damping_vector(state.q, state.qd, params.spring_k_eff,
                                          params.arm_damping)


def kinetic_energy(state: SystemState, params: InertiaParams) -> float:
    kin, _ = _kernels.energies(state.q, state.qd, *params._kernel_args(),
                               params.spring_k_eff, params.gravity,
                               params.payload_mass, params.mass_regularizer)
    return float(kin)


def potential_energy(state: SystemState, params: InertiaParams) -> float:
    """Gravitational plus elastic (spring) potential, datum at z = 0."""
    _, pot = _kernels.energies(state.q, state.qd, *params._kernel_args(),
                               params.spring_k_eff, params.gravity,
                               params.payload_mass, params.mass_regularizer)
    return float(pot)


def total_energy(state: SystemState, params: InertiaParams) -> float:
    kin, pot = _kernels.energies(state.q, state.qd, *params._kernel_args(),
                                 params.spring_k_eff, params.gravity,
                                 params.payload_mass, params.mass_regularizer)
    return float(kin + pot)


def forward_dynamics(state: SystemState, forces: GeneralizedForces,
                     params: InertiaParams) -> np.ndarray:
    """Generalized accelerations q̈ = M⁻¹(τ + τ_ext − Cq̇ − G − S)."""
    return _kernels.forward_dynamics(
        state.q, state.qd, forces.total(), *params._kernel_args(),
        params.spring_k_eff, params.arm_damping, params.gravity,
        params.payload_mass, params.mass_regularizer)


def step(state: SystemState, forces: GeneralizedForces, params: InertiaParams,
         dt: float, substeps: int = 1) -> SystemState:
    """Advance by classical RK4 with zero-order-held forces. Deterministic."""
    if dt <= 0.0 or substeps < 1:
        raise ValueError("dt must be > 0 and substeps >= 1")
    y = np.concatenate([state.q, state.qd])
    y, status = _kernels.rk4_steps(
        y, forces.total(), *params._kernel_args(), params.spring_k_eff,
        params.arm_damping, params.gravity, params.payload_mass,
        params.mass_regularizer, dt, substeps)
    nq = params.nq
    if status == _kernels.STATUS_NAN:
        raise IntegrationFault("integrator produced a non-finite state")
    if status == _kernels.STATUS_GIMBAL:
        raise GimbalLockError(f"UAV pitch exceeded the {PITCH_GUARD:.3f} rad guard")
    return SystemState.from_vectors(y[:nq], y[nq:])


def tension_coupling_matrix(state: SystemState, params: InertiaParams,
                            geom: TendonGeometry) -> np.ndarray:
    """B mapping the 4 motor-side tendon tensions to generalized forces (nq×4).

    Tension T does work −T·(tendon displacement rate), so each segment
    contributes −J_sᵀT on its (alpha, beta) coordinates, with J_s the 4×2
    actuation Jacobian. Uniform co-contraction [1,1,1,1] lies in the nullspace.
    """
    B = np.zeros((params.nq, 4))
    r = geom.routing_radius
    ang = state.arm[1::2, None] + geom.angles[None, :]
    B[6::2] = r * np.cos(ang)
    B[7::2] = -r * state.arm[0::2, None] * np.sin(ang)
    return B


def actuator_forces(state: SystemState, thrust: float, body_torque: np.ndarray,
                    tensions: np.ndarray, params: InertiaParams,
                    geom: TendonGeometry) -> GeneralizedForces:
    """Generalized forces from the rotor thrust norm, body torque and tensions.

    Thrust acts along the body z axis in world coordinates; the body torque
    maps onto Euler coordinates through T(Φ)ᵀ.
    """
    tau = np.zeros(params.nq)
    tau[0:3] = thrust * state.uav_rotation()[:, 2]
    T = euler_rate_matrix(state.euler[0], state.euler[1])
    tau[3:6] = T.T @ np.asarray(body_torque, dtype=float).reshape(3)
    tau += tension_coupling_matrix(state, params, geom) @ np.asarray(tensions, dtype=float).reshape(4)
    return GeneralizedForces(tau)
