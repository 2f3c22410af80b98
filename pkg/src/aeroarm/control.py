"""Sliding-mode flight and arm controllers with adaptive terms.

Outer loop: UAV position control with online mass estimation. The thrust
vector it emits is converted to a desired attitude quaternion tracked by the
inner attitude loop. The arm runs a task-space sliding-mode law on top of a
locally affine tension-to-acceleration model evaluated from the dynamics,
and every tension command passes through a floor regulator that adds uniform
co-contraction to keep all tendons taut.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import InertiaParams, SystemState, tension_coupling_matrix
from .errors import InfeasibleTensionError, SingularConfigurationError, UnreachableAttitudeError, ZeroThrustError
from .rotations import euler_rate_matrix, quat_conj, quat_from_matrix, quat_mul
from .tendon import TendonGeometry

E3 = np.array([0.0, 0.0, 1.0])


def _pd3(M, name):
    M = np.asarray(M, dtype=float)
    M = np.diag(np.full(3, float(M))) if M.ndim == 0 else M.reshape(3, 3)
    if np.max(np.abs(M - M.T)) > 1e-12 or np.any(np.linalg.eigvalsh(M) <= 0.0):
        raise ValueError(f"{name} must be symmetric positive definite")
    return M


@dataclass(frozen=True)
class UavGains:
    """Gains of the position/attitude sliding-mode loops."""

    K_pos: np.ndarray = 1.5
    C_pos: np.ndarray = 4.0
    lambda_m: float = 0.02
    K_q: np.ndarray = 8.0
    C_q: np.ndarray = 0.6
    m_min: float = 0.3
    m_max: float = 3.0

    def __post_init__(self):
        for name in ("K_pos", "C_pos", "K_q", "C_q"):
            object.__setattr__(self, name, _pd3(getattr(self, name), name))
        if self.lambda_m <= 0.0 or not 0.0 < self.m_min < self.m_max:
            raise ValueError("lambda_m > 0 and 0 < m_min < m_max required")


@dataclass(frozen=True)
class ArmGains:
    """Gains of the task-space arm sliding-mode loop."""

    Lambda: np.ndarray = 6.0
    K_p: np.ndarray = 120.0
    K_v: np.ndarray = 22.0
    K_adapt: np.ndarray = 800.0
    K_adapt_pos: np.ndarray = 100.0

    def __post_init__(self):
        for name in ("Lambda", "K_p", "K_v", "K_adapt", "K_adapt_pos"):
            object.__setattr__(self, name, _pd3(getattr(self, name), name))


@dataclass(frozen=True)
class TensionLoopParams:
    """Tension floor and actuator ceiling for the slack-avoidance regulator."""

    tension_floor: float = 0.5
    tension_max: float = 35.0

    def __post_init__(self):
        if not 0.0 < self.tension_floor < self.tension_max:
            raise ValueError("need 0 < tension_floor < tension_max")


DEFAULT_M_HAT = 1.251


@dataclass
class AdaptiveState:
    """Online estimates carried across control steps."""

    m_hat: float = DEFAULT_M_HAT
    delta_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))


def tension_regulator(raw: np.ndarray, params: TensionLoopParams) -> np.ndarray:
    """Smallest uniform co-contraction offset that lifts every tendon to the floor.

    A uniform offset produces zero net bending moment (the four routing
    cosines sum to zero), so pairwise differences — and hence the commanded
    motion — are preserved exactly.
    """
    T = np.asarray(raw, dtype=float).reshape(4)
    c = max(0.0, params.tension_floor - float(T.min()))
    out = T + c
    while c > 0.0 and float(out.min()) < params.tension_floor:  # FP rounding
        c = np.nextafter(c, np.inf)
        out = T + c
    if np.max(out) > params.tension_max:
        raise InfeasibleTensionError(
            f"floor {params.tension_floor} needs offset {c:.3g} pushing max tension "
            f"{np.max(out):.3g} beyond limit {params.tension_max}")
    return out


def uav_position_control(state: SystemState, p_ref: np.ndarray, v_ref: np.ndarray,
                         a_ref: np.ndarray, gains: UavGains,
                         adaptive: AdaptiveState, dt: float,
                         gravity: float = 9.81) -> np.ndarray:
    """Thrust-vector command from the position sliding surface; updates m_hat.

    m_hat integrates -lambda_m * theta . S_p with projection onto
    [m_min, m_max]: thrust deficit (hovering low) drives the estimate up.
    """
    p_e = state.position - np.asarray(p_ref, dtype=float)
    v_e = state.velocity - np.asarray(v_ref, dtype=float)
    S_p = v_e + gains.K_pos @ p_e
    theta = gravity * E3 + np.asarray(a_ref, dtype=float) - gains.K_pos @ v_e
    U = adaptive.m_hat * theta - gains.C_pos @ S_p
    m_dot = -gains.lambda_m * float(theta @ S_p)
    adaptive.m_hat = float(np.clip(adaptive.m_hat + dt * m_dot, gains.m_min, gains.m_max))
    if not np.all(np.isfinite(U)):
        raise ZeroThrustError("non-finite thrust command")
    return U


def desired_attitude(U: np.ndarray) -> np.ndarray:
    """Unit quaternion (yaw-free) rotating body z onto the thrust direction."""
    U = np.asarray(U, dtype=float).reshape(3)
    norm = float(np.linalg.norm(U))
    if norm == 0.0:
        raise ZeroThrustError("zero-norm thrust: desired attitude undefined")
    half = 0.5 + U[2] / (2.0 * norm)
    if half <= 1e-12:
        raise UnreachableAttitudeError("thrust points straight down")
    sigma = np.sqrt(half)
    f = 1.0 / (2.0 * norm * sigma)
    return np.array([sigma, -f * U[1], f * U[0], 0.0])


def uav_attitude_control(state: SystemState, Q_c: np.ndarray, gains: UavGains,
                         J_hat: np.ndarray, omega_ref: np.ndarray | None = None) -> np.ndarray:
    """Body torque from the quaternion sliding surface with gyroscopic feedforward."""
    Q = quat_from_matrix(state.uav_rotation())
    q_err = quat_mul(quat_conj(Q_c), Q)
    if q_err[0] < 0.0:
        q_err = -q_err
    omega = state.body_rates()
    omega_e = omega if omega_ref is None else omega - np.asarray(omega_ref, dtype=float)
    S_q = omega_e + gains.K_q @ q_err[1:]
    Jw = J_hat @ omega
    gyro = np.array([omega[1] * Jw[2] - omega[2] * Jw[1],
                     omega[2] * Jw[0] - omega[0] * Jw[2],
                     omega[0] * Jw[1] - omega[1] * Jw[0]])
    return gyro - gains.C_q @ S_q


@dataclass
class ArmTaskController:
    """Task-space sliding-mode tracker emitting regulated tendon tensions.

    task_type 0 tracks the tip bend vector (rad, well-defined through the
    straight configuration); task_type 1 tracks the tip position in the arm
    base frame.
    """

    gains: ArmGains
    tension_params: TensionLoopParams
    geom: TendonGeometry = field(default_factory=TendonGeometry)
    task_type: int = 0
    pinv_damping: float = 1e-6
    regulate: bool = True
    adaptive: AdaptiveState = field(default_factory=AdaptiveState)
    saturated: bool = False
    last_task: np.ndarray | None = None
    last_raw: np.ndarray | None = None
    last_S: np.ndarray | None = None

    def update(self, state: SystemState, forces_no_tendon: np.ndarray,
               w_ref: np.ndarray, wd_ref: np.ndarray, wdd_ref: np.ndarray,
               params: InertiaParams, dt: float,
               B: np.ndarray | None = None) -> np.ndarray:
        """One control step: returns the 4 tendon tension commands.

        B is the tension coupling matrix at `state`; pass it in when the
        caller already has it, else it is computed here.
        """
        if B is None:
            B = tension_coupling_matrix(state, params, self.geom)
        w, wdot, a_c, b_c = _kernels.arm_task_terms(
            state.q, state.qd, np.asarray(forces_no_tendon, dtype=float), B,
            self.task_type, *params._kernel_args(), params.spring_k_eff,
            params.arm_damping, params.gravity, params.payload_mass,
            params.mass_regularizer)
        self.last_task = w
        if np.max(np.abs(b_c)) < 1e-12:
            raise SingularConfigurationError("tension-to-task sensitivity vanished")

        e = w - np.asarray(w_ref, dtype=float)
        ed = wdot - np.asarray(wd_ref, dtype=float)
        S = ed + self.gains.Lambda @ e
        self.last_S = S
        a_cmd = (np.asarray(wdd_ref, dtype=float) - self.gains.Lambda @ ed
                 - self.gains.K_v @ ed - self.gains.K_p @ e + self.adaptive.delta_hat)
        # damped least squares in tension space
        BtB = b_c @ b_c.T + self.pinv_damping * np.eye(3)
        raw = b_c.T @ np.linalg.solve(BtB, a_cmd - a_c)
        self.last_raw = raw

        if self.regulate:
            T = tension_regulator(raw, self.tension_params)
        else:
            T = np.clip(raw, 0.0, self.tension_params.tension_max)
        self.saturated = bool(np.any(raw > self.tension_params.tension_max - 1e-9) or
                              (not self.regulate and np.any(raw < 0.0)))
        if not self.saturated:
            # The bend task (rad) sees a plant gain ~40x larger than the tip
            # position task (m), so the disturbance estimate adapts at
            # task-specific rates. Tensions only span rank(b_c) directions of
            # the task space; keep the estimate inside that actuated subspace,
            # otherwise it integrates unactuatable error components that later
            # rotate into the actuated span.
            K_a = self.gains.K_adapt if self.task_type == 0 else self.gains.K_adapt_pos
            d = self.adaptive.delta_hat - dt * (K_a @ S)
            U, s, _ = np.linalg.svd(b_c, full_matrices=False)
            Ur = U[:, s > 1e-6 * s[0]]
            self.adaptive.delta_hat = Ur @ (Ur.T @ d)
        return T
