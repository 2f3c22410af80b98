"""Closed-loop scenario runner: dynamics + controllers + sensors + CSV logs.

One run is a sequential loop: at each control period the controllers emit a
thrust vector, a body torque and four tendon tensions; the physics then takes
`substeps` RK4 steps under those zero-order-held commands. Sensor streams run
on their own clocks on the physics grid. Everything is deterministic given
(scenario, config, seed).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .config import SimConfig
from .control import (AdaptiveState, ArmTaskController, desired_attitude,
                      uav_attitude_control, uav_position_control)
from .dynamics import (InertiaParams, SystemState, tension_coupling_matrix,
                       total_energy)
from .errors import GimbalLockError, IntegrationFault
from .pcc import ArmConfig, RigidPose, canonical_segment
from .rotations import (euler_rate_matrix, matrix_to_euler_zyx, quat_conj,
                        quat_from_matrix, quat_mul)
from .scenarios import Scenario
from .sensors import ImuReading, ImuSensor, NoiseModel, TensionSensor, config_from_imu
from .tendon import actuation_from_config, config_from_actuation

COLUMNS = (
    ["t"]
    + [f"q{i}" for i in range(16)]
    + [f"qd{i}" for i in range(16)]
    + ["thrust", "Ux", "Uy", "Uz", "m_hat", "taux", "tauy", "tauz"]
    + [f"tension{i}" for i in range(1, 5)]
    + [f"raw_tension{i}" for i in range(1, 5)]
    + [f"meas_tension{i}" for i in range(1, 5)]
    + ["Sp_x", "Sp_y", "Sp_z", "Sq_x", "Sq_y", "Sq_z", "Sa_x", "Sa_y", "Sa_z"]
    + ["dhat_x", "dhat_y", "dhat_z"]
    + ["w_x", "w_y", "w_z", "wref_x", "wref_y", "wref_z"]
    + ["tip_roll", "tip_pitch", "imu_roll", "imu_pitch"]
    + ["ee_x", "ee_y", "ee_z", "ee_est_x", "ee_est_y", "ee_est_z",
       "ee_unc_x", "ee_unc_y", "ee_unc_z"]
    + ["ori_err_corr_deg", "ori_err_unc_deg", "min_tension", "slack_raw", "saturated"]
)
_IDX = {name: i for i, name in enumerate(COLUMNS)}


@dataclass
class RunResult:
    scenario: str
    columns: list[str]
    rows: list[list[float]]
    summary: dict
    wall_time: float

    def column(self, name: str) -> np.ndarray:
        return np.array([r[_IDX[name]] for r in self.rows])


def _rotation_angle_deg(Ra: np.ndarray, Rb: np.ndarray) -> float:
    c = 0.5 * (np.trace(Ra.T @ Rb) - 1.0)
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def run_scenario(scenario: Scenario, cfg: SimConfig, *,
                 tension_loop: bool | None = None,
                 imu_correction: bool | None = None,
                 seed: int | None = None) -> RunResult:
    """Run one scenario to completion and compute its summary metrics."""
    t_start = time.perf_counter()
    regulate = cfg.tension_loop_enabled if tension_loop is None else tension_loop
    correct = cfg.sensors.imu_correction if imu_correction is None else imu_correction
    seed = cfg.seed if seed is None else seed

    params = cfg.inertia
    if scenario.params_override is not None:
        params = scenario.params_override(params)
    params_ctrl = params  # controllers never see the payload: it is the unknown
    params_phys = params
    n = params.n
    nq = params.nq
    lengths = params.segment_lengths

    q = np.zeros(nq)
    q[0:3] = scenario.initial_position
    if scenario.initial_arm is not None:
        q[6:] = scenario.initial_arm
    qd = np.zeros(nq) if scenario.initial_rates is None else scenario.initial_rates.copy()

    gains = cfg.uav_gains
    adaptive = AdaptiveState(m_hat=cfg.m_hat_init)
    arm_gains = cfg.arm_gains
    if scenario.arm_gains_override:
        arm_gains = replace(arm_gains, **dict(scenario.arm_gains_override))
    arm_ctl = ArmTaskController(
        gains=arm_gains, tension_params=cfg.tension_loop, geom=cfg.geometry,
        task_type=scenario.arm_task_type, pinv_damping=cfg.pinv_damping,
        regulate=regulate)
    J_hat = params.uav_inertia

    sig = cfg.sensors
    imu = ImuSensor(NoiseModel(np.zeros(6),
                               np.array([sig.imu_sigma_angle] * 3 + [sig.imu_sigma_rate] * 3),
                               seed=seed * 7919 + 1))
    tension_sensor = TensionSensor(NoiseModel(np.zeros(4), np.full(4, sig.tension_sigma),
                                              seed=seed * 7919 + 2))

    dt_c, dt_p = cfg.dt_control, cfg.dt_physics
    substeps = cfg.substeps
    n_ctrl = int(round(scenario.duration / dt_c))
    imu_period = 1.0 / sig.imu_rate

    # energy audit only makes sense on uncontrolled runs
    audit = not scenario.uav_enabled and not scenario.arm_enabled
    e0 = total_energy(SystemState.from_vectors(q, qd), params_phys) if audit else 0.0

    payloads = list(scenario.payload_schedule)
    phys_args = params_phys._kernel_args()

    next_imu = 0.0
    last_imu: ImuReading | None = None
    last_imu_rpy = np.zeros(3)
    est = {}  # estimator outputs, held between IMU samples
    rows: list[list[float]] = []
    t_phys = 0.0

    def _arm_delta(cfg_arm: ArmConfig) -> np.ndarray:
        d = np.empty(2 * n)
        for s, seg in enumerate(cfg_arm.segments):
            d[2 * s] = seg.alpha
            d[2 * s + 1] = seg.beta
        return d

    def sample_imu(t: float):
        nonlocal last_imu, last_imu_rpy
        R_tip, p_tip = _kernels.chain_pose(q[6:], lengths)
        rpy = np.array(matrix_to_euler_zyx(R_tip))
        rate = (rpy - last_imu_rpy) / imu_period if last_imu is not None else np.zeros(3)
        last_imu_rpy = rpy
        last_imu = imu.sample(RigidPose(R_tip, p_tip), rate, t)
        # motor-side encoder reading: geometric displacement summed over the
        # section minus elastic tendon stretch under the applied tensions
        geo = np.zeros(4)
        for s in range(n):
            seg = canonical_segment(q[6 + 2 * s], q[7 + 2 * s], lengths[s],
                                    alpha_max=cfg.alpha_max)
            geo += actuation_from_config(seg, cfg.geometry)
        reading = geo - sig.tendon_compliance * applied_tensions
        # keep only the antagonistic-differential part: uniform co-contraction
        # stretch is unobservable from the pair structure and carries no bend
        reading = 0.5 * np.array([reading[0] - reading[2], reading[1] - reading[3],
                                  reading[2] - reading[0], reading[3] - reading[1]])
        per_seg = [reading / n] * n
        est_unc = ArmConfig(tuple(
            config_from_actuation(d, cfg.geometry, lengths[s])
            for s, d in enumerate(per_seg)))
        if correct:
            est_corr = config_from_imu(last_imu, per_seg, cfg.geometry, lengths,
                                       alpha_max=cfg.alpha_max)
        else:
            est_corr = est_unc
        Rc, pc = _kernels.chain_pose(_arm_delta(est_corr), lengths)
        Ru, pu = _kernels.chain_pose(_arm_delta(est_unc), lengths)
        est["corr"] = (Rc, pc)
        est["unc"] = (Ru, pu)
        est["ori_corr"] = _rotation_angle_deg(R_tip, Rc)
        est["ori_unc"] = _rotation_angle_deg(R_tip, Ru)

    applied_tensions = np.zeros(4)
    sample_imu(0.0)

    for i in range(n_ctrl):
        t = i * dt_c
        while payloads and payloads[0][0] <= t + 1e-12:
            _, m = payloads.pop(0)
            params_phys = params_phys.with_payload(m)
            phys_args = params_phys._kernel_args()

        state = SystemState.from_vectors(q, qd)
        R_uav = state.uav_rotation()

        if scenario.uav_enabled:
            p_ref, v_ref, a_ref = scenario.uav_ref(t)
            U = uav_position_control(state, p_ref, v_ref, a_ref, gains, adaptive,
                                     dt_c, gravity=params_ctrl.gravity)
            Q_c = desired_attitude(U)
            tau_b = uav_attitude_control(state, Q_c, gains, J_hat)
            thrust = float(np.linalg.norm(U))
            S_p = (state.velocity - v_ref) + gains.K_pos @ (state.position - p_ref)
            q_err = quat_mul(quat_conj(Q_c), quat_from_matrix(state.uav_rotation()))
            if q_err[0] < 0.0:
                q_err = -q_err
            S_q = state.body_rates() + gains.K_q @ q_err[1:]
        else:
            U = np.zeros(3)
            tau_b = np.zeros(3)
            thrust = 0.0
            p_ref = np.zeros(3)
            S_p = np.zeros(3)
            S_q = np.zeros(3)

        # thrust/torque generalized forces, assembled once per step
        f0 = np.zeros(nq)
        f0[0:3] = thrust * R_uav[:, 2]
        T_euler = euler_rate_matrix(state.euler[0], state.euler[1])
        f0[3:6] = T_euler.T @ tau_b
        B = tension_coupling_matrix(state, params_ctrl, cfg.geometry)

        if scenario.arm_enabled:
            w_ref, wd_ref, wdd_ref = scenario.arm_ref(t)
            tensions = arm_ctl.update(state, f0, w_ref, wd_ref, wdd_ref,
                                      params_ctrl, dt_c, B=B)
            raw = arm_ctl.last_raw
            w = arm_ctl.last_task
            S_a = arm_ctl.last_S
        else:
            w_ref = np.zeros(3)
            tensions = np.zeros(4)
            raw = np.zeros(4)
            w = np.zeros(3)
            S_a = np.zeros(3)

        applied_tensions = tensions
        meas = tension_sensor.sample(tensions, t).tensions
        tau_total = f0 + B @ tensions

        # log the state the commands were computed from
        R_tip, p_tip = _kernels.chain_pose(q[6:], lengths)
        tip_roll, tip_pitch, _ = matrix_to_euler_zyx(R_tip)
        base = state.position + R_uav @ params.mount_translation
        R_base = R_uav @ params.mount_rotation
        ee_true = base + R_base @ p_tip
        ee_est = base + R_base @ est["corr"][1]
        ee_unc = base + R_base @ est["unc"][1]

        row = np.empty(len(COLUMNS))
        row[0] = t
        row[1:17] = q
        row[17:33] = qd
        row[33:41] = (thrust, U[0], U[1], U[2], adaptive.m_hat,
                      tau_b[0], tau_b[1], tau_b[2])
        row[41:45] = tensions
        row[45:49] = raw
        row[49:53] = meas
        row[53:56] = S_p
        row[56:59] = S_q
        row[59:62] = S_a
        row[62:65] = arm_ctl.adaptive.delta_hat
        row[65:68] = w
        row[68:71] = w_ref
        row[71:75] = (tip_roll, tip_pitch, last_imu.roll, last_imu.pitch)
        row[75:78] = ee_true
        row[78:81] = ee_est
        row[81:84] = ee_unc
        row[84:89] = (est["ori_corr"], est["ori_unc"], tensions.min(),
                      float(raw.min() < cfg.tension_loop.tension_floor),
                      float(arm_ctl.saturated))
        rows.append(row.tolist())

        y = np.concatenate([q, qd])
        done = 0
        while done < substeps:
            # stop at IMU sample times that fall inside the control period
            until_imu = int(round((next_imu + imu_period - t_phys) / dt_p))
            k = max(1, min(substeps - done, until_imu))
            y, status = _kernels.rk4_steps(
                y, tau_total, *phys_args, params_phys.spring_k_eff,
                params_phys.arm_damping, params_phys.gravity,
                params_phys.payload_mass, params_phys.mass_regularizer, dt_p, k)
            if status == _kernels.STATUS_NAN:
                raise IntegrationFault(f"non-finite state at t={t_phys:.4f}s")
            if status == _kernels.STATUS_GIMBAL:
                raise GimbalLockError(f"pitch guard tripped at t={t_phys:.4f}s")
            q, qd = y[:nq], y[nq:]
            done += k
            t_phys += k * dt_p
            if t_phys + 1e-9 >= next_imu + imu_period:
                next_imu += imu_period
                sample_imu(t_phys)

    wall = time.perf_counter() - t_start
    summary = _summarize(scenario, cfg, rows, audit, e0,
                         SystemState.from_vectors(q, qd), params_phys)
    return RunResult(scenario.name, list(COLUMNS), rows, summary, wall)


def _summarize(scenario: Scenario, cfg: SimConfig, rows: list[list[float]],
               audit: bool, e0: float, final_state: SystemState,
               params_phys: InertiaParams) -> dict:
    A = np.asarray(rows)
    t = A[:, _IDX["t"]]
    summary: dict = {
        "scenario": scenario.name,
        "duration_s": scenario.duration,
        "control_steps": len(rows),
    }

    pos = A[:, [_IDX["q0"], _IDX["q1"], _IDX["q2"]]]
    p_ref = np.array([scenario.uav_ref(ti)[0] for ti in t])
    pos_err = np.linalg.norm(pos - p_ref, axis=1)
    summary["max_pos_err"] = float(np.max(pos_err))
    summary["rms_pos_err"] = float(np.sqrt(np.mean(pos_err ** 2)))
    summary["m_hat_final"] = float(A[-1, _IDX["m_hat"]])

    if scenario.arm_enabled:
        w = A[:, [_IDX["w_x"], _IDX["w_y"], _IDX["w_z"]]]
        w_ref = A[:, [_IDX["wref_x"], _IDX["wref_y"], _IDX["wref_z"]]]
        err = np.linalg.norm(w - w_ref, axis=1)
        # steady-state window: the last second, or the last half of short runs
        steady = t >= scenario.duration - min(1.0, 0.5 * scenario.duration)
        summary["rms_task_err"] = float(np.sqrt(np.mean(err ** 2)))
        summary["max_task_err"] = float(np.max(err))
        summary["steady_task_err"] = float(np.mean(err[steady]))
        band = np.deg2rad(1.0) if scenario.arm_task_type == 0 else 2e-3
        ok = err < band
        settle = t[-1]
        for k in range(len(t)):
            if ok[k:].all():
                settle = t[k]
                break
        summary["settle_time"] = float(settle)
        if scenario.arm_task_type == 0:
            # tip pitch implied by the bend-vector reference
            theta_r = np.linalg.norm(w_ref, axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                cb = np.where(theta_r > 0, w_ref[:, 0] / np.maximum(theta_r, 1e-12), 1.0)
            pitch_ref = np.arcsin(np.clip(cb * np.sin(theta_r), -1.0, 1.0))
            pitch_err = np.degrees(np.abs(A[:, _IDX["tip_pitch"]] - pitch_ref))
            summary["steady_pitch_err_deg"] = float(np.mean(pitch_err[steady]))
        summary["min_tension"] = float(np.min(A[:, _IDX["min_tension"]]))
        summary["min_raw_tension"] = float(np.min(A[:, [_IDX[f"raw_tension{i}"] for i in range(1, 5)]]))
        summary["slack_steps"] = int(np.sum(A[:, _IDX["slack_raw"]]))

    if scenario.payload_schedule:
        t_ev = scenario.payload_schedule[-1][0]
        # settle margin after the event: 2 s, or half the remaining run
        win = t >= t_ev + min(2.0, 0.5 * (scenario.duration - t_ev))
        summary["ori_err_corrected_deg"] = float(np.mean(A[win, _IDX["ori_err_corr_deg"]]))
        summary["ori_err_uncorrected_deg"] = float(np.mean(A[win, _IDX["ori_err_unc_deg"]]))

    if audit:
        e1 = total_energy(final_state, params_phys)
        summary["energy_initial_J"] = e0
        summary["energy_final_J"] = e1
        summary["energy_drift"] = float(abs(e1 - e0) / abs(e0)) if e0 != 0.0 else 0.0
    return summary


def check_thresholds(scenario: Scenario, summary: dict) -> list[str]:
    """Evaluate the scenario's pass/fail thresholds; returns failure messages."""
    failures = []
    for key, op, limit in scenario.thresholds:
        val = summary.get(key)
        if val is None:
            failures.append(f"{scenario.name}: missing metric {key}")
            continue
        ok = val < limit if op == "<" else val >= limit
        if not ok:
            failures.append(f"{scenario.name}: {key}={val:.6g} violates {op} {limit}")
    return failures


def emit_logs(result: RunResult, out_dir: str | Path) -> tuple[Path, Path]:
    """Write <name>.csv and <name>_summary.txt; bit-stable for identical runs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.scenario}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([repr(float(v)) for v in row])
    summary_path = out / f"{result.scenario}_summary.txt"
    with open(summary_path, "w") as fh:
        for key, val in result.summary.items():
            fh.write(f"{key}: {repr(val) if isinstance(val, float) else val}\n")
    return csv_path, summary_path
