"""End-to-end acceptance criteria.

Each test prints one PASS/FAIL line with the measured figure next to the
required bound. Closed-loop criteria reuse the session-scoped `suite` fixture
(the full scenario suite, run twice for the byte-identity check).
"""

import time

import numpy as np

from aeroarm import _kernels
from aeroarm.control import desired_attitude
from aeroarm.dynamics import InertiaParams, SystemState, mass_matrix, coriolis_matrix, \
    gravity_vector, potential_energy
from aeroarm.harness import run_scenario
from aeroarm.pcc import ALPHA_SWITCH, SegmentConfig, _arc_xyz, \
    segment_config_from_tip, segment_tip_displacement
from aeroarm.rotations import quat_rotate
from aeroarm.scenarios import get_scenario
from aeroarm.tendon import TendonGeometry, actuation_from_config, \
    actuation_jacobian, config_from_actuation

GEOM = TendonGeometry()
L = 0.05


def _report(label: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
    assert ok, f"{label}: {detail}"


def test_c01_kinematic_round_trip_grid():
    alphas = np.linspace(1e-3, np.pi / 2, 50)
    betas = np.linspace(-np.pi + 1e-12, np.pi, 50)
    t0 = time.perf_counter()
    worst = 0.0
    for a in alphas:
        for b in betas:
            rec = segment_config_from_tip(
                segment_tip_displacement(SegmentConfig(a, b, L)), L)
            db = np.arctan2(np.sin(rec.beta - b), np.cos(rec.beta - b))
            worst = max(worst, abs(rec.alpha - a), abs(a * db))
    wall = time.perf_counter() - t0
    _report("criterion 1 (kinematic round trip)", worst < 1e-9 and wall < 1.0,
            f"max_err={worst:.3e} (<1e-9), wall={wall:.3f}s (<1s), 50x50 grid")


def test_c02_taylor_branch_fidelity():
    worst = 0.0
    for a in np.linspace(0.005, 0.02, 601):
        rc = L * (1.0 - np.cos(a)) / a
        ac = L * np.sin(a) / a
        a2 = a * a
        rt = L * a * (a2 * a2 - 30.0 * a2 + 360.0) / 720.0
        at = L * (a2 * a2 - 20.0 * a2 + 120.0) / 120.0
        worst = max(worst, abs(rt - rc), abs(at - ac))
    eps = 1e-12
    lo = _arc_xyz(ALPHA_SWITCH - eps, L)
    hi = _arc_xyz(ALPHA_SWITCH + eps, L)
    jump = max(abs(lo[0] - hi[0]), abs(lo[1] - hi[1]))
    _report("criterion 2 (series-branch fidelity)", worst < 1e-8 and jump < 1e-9,
            f"series_vs_closed={worst:.3e} (<1e-8), switch_jump={jump:.3e} (<1e-9)")


def test_c03_antagonism_and_inverse():
    rng = np.random.default_rng(2024)
    worst_rel, worst_inv = 0.0, 0.0
    for _ in range(10_000):
        cfg = SegmentConfig(rng.uniform(1e-3, np.pi / 2),
                            rng.uniform(-np.pi, np.pi), L)
        q = actuation_from_config(cfg, GEOM)
        scale = max(np.max(np.abs(q)), 1e-300)
        worst_rel = max(worst_rel, abs(q[0] + q[2]) / scale,
                        abs(q[1] + q[3]) / scale, abs(q.sum()) / scale)
        rec = config_from_actuation(q, GEOM, L)
        db = np.arctan2(np.sin(rec.beta - cfg.beta), np.cos(rec.beta - cfg.beta))
        worst_inv = max(worst_inv, abs(rec.alpha - cfg.alpha), abs(db))
    _report("criterion 3 (antagonistic actuation)",
            worst_rel < 1e-15 * 10 and worst_inv < 1e-9,
            f"pair_sum_rel={worst_rel:.3e} (~1e-15), inverse_err={worst_inv:.3e} "
            f"(<1e-9), 10000 configs")


def test_c04_actuation_jacobian_vs_finite_differences():
    h = 1e-6
    worst = 0.0
    for a in np.linspace(0.01, np.pi / 2 - 0.01, 50):
        for b in np.linspace(-3.0, 3.0, 50):
            J = actuation_jacobian(SegmentConfig(a, b, L), GEOM)
            for j, (da, db) in enumerate(((h, 0.0), (0.0, h))):
                hi = actuation_from_config(
                    SegmentConfig(a + da, b + db, L, alpha_max=np.pi), GEOM)
                lo = actuation_from_config(
                    SegmentConfig(a - da, b - db, L, alpha_max=np.pi), GEOM)
                worst = max(worst, np.max(np.abs(J[:, j] - (hi - lo) / (2 * h))))
    _report("criterion 4 (actuation Jacobian)", worst < 1e-6,
            f"max_dev_vs_central_fd={worst:.3e} (<1e-6), 50x50 grid")


def test_c05_desired_attitude_quaternion():
    rng = np.random.default_rng(77)
    worst_norm, worst_align = 0.0, 0.0
    count = 0
    while count < 10_000:
        U = rng.standard_normal(3) * rng.uniform(0.5, 30.0)
        if U[2] <= -0.99 * np.linalg.norm(U):
            continue  # thrust straight down is declared unreachable
        count += 1
        Q = desired_attitude(U)
        worst_norm = max(worst_norm, abs(np.linalg.norm(Q) - 1.0))
        z = quat_rotate(Q, [0.0, 0.0, 1.0])
        worst_align = max(worst_align,
                          float(np.linalg.norm(z - U / np.linalg.norm(U))))
    hover = desired_attitude([0.0, 0.0, 1.2 * 9.81])
    hover_exact = bool(np.all(hover == np.array([1.0, 0.0, 0.0, 0.0])))
    _report("criterion 5 (thrust-to-attitude map)",
            worst_norm < 1e-12 and worst_align < 1e-9 and hover_exact,
            f"norm_err={worst_norm:.3e} (<1e-12), align_err={worst_align:.3e} "
            f"(<1e-9), hover==identity={hover_exact}, 10000 thrusts")


def test_c06_dynamics_consistency_and_energy(suite):
    rng = np.random.default_rng(99)
    params = InertiaParams()
    min_eig = np.inf
    worst_skew = 0.0
    h = 1e-6
    for i in range(100):
        q = np.zeros(16)
        q[0:3] = rng.uniform(-1, 1, 3)
        q[3:6] = rng.uniform(-0.8, 0.8, 3)
        q[6::2] = rng.uniform(-1.2, 1.2, 5)
        q[7::2] = rng.uniform(-np.pi, np.pi, 5)
        qd = 0.5 * rng.standard_normal(16)
        s = SystemState.from_vectors(q, qd)
        M = mass_matrix(s, params)
        min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(M))))
        if i < 20:
            C = coriolis_matrix(s, params)
            Mp = mass_matrix(SystemState.from_vectors(q + h * qd, qd), params)
            Mm = mass_matrix(SystemState.from_vectors(q - h * qd, qd), params)
            worst_skew = max(worst_skew,
                             abs(qd @ ((Mp - Mm) / (2 * h) - 2 * C) @ qd))
    # gravity vector against a finite difference of the gravitational potential
    worst_g = 0.0
    for _ in range(3):
        q = np.zeros(16)
        q[6::2] = rng.uniform(-1.0, 1.0, 5)
        q[7::2] = rng.uniform(-np.pi, np.pi, 5)
        q[3:6] = rng.uniform(-0.5, 0.5, 3)
        s = SystemState.from_vectors(q, np.zeros(16))
        G = gravity_vector(s, params)
        for k in range(16):
            qp, qm = q.copy(), q.copy()
            qp[k] += h
            qm[k] -= h
            elastic = lambda v: 2.0 * params.spring_k_eff * np.sum(v[6::2] ** 2)
            vp = potential_energy(SystemState.from_vectors(qp, np.zeros(16)), params) - elastic(qp)
            vm = potential_energy(SystemState.from_vectors(qm, np.zeros(16)), params) - elastic(qm)
            worst_g = max(worst_g, abs(G[k] - (vp - vm) / (2 * h)))
    drift = suite.first.results["conservative-drift"].summary["energy_drift"]
    ok = min_eig > 0.0 and worst_skew < 1e-6 and worst_g < 1e-6 and drift < 1e-3
    _report("criterion 6 (dynamics consistency)", ok,
            f"min_eig={min_eig:.3e} (>0, 100 states), skew_identity={worst_skew:.3e} "
            f"(<1e-6), gravity_vs_fd={worst_g:.3e} (<1e-6), "
            f"energy_drift_10s={drift:.3e} (<1e-3)")


def test_c07_bend_step_response(suite):
    res = suite.first.results["bend-pitch-30deg"]
    s = res.summary
    floor_every_step = bool(np.all(res.column("min_tension") >= 0.5))
    ok = (s["settle_time"] < 2.0 and s["steady_pitch_err_deg"] < 1.0
          and floor_every_step and res.wall_time < 5.0)
    _report("criterion 7 (30 deg bend step)", ok,
            f"settle={s['settle_time']:.3f}s (<2), "
            f"steady_pitch_err={s['steady_pitch_err_deg']:.3f}deg (<1), "
            f"floor_every_step={floor_every_step}, wall={res.wall_time:.2f}s (<5)")


def test_c08_tension_floor_ab_comparison(suite, cfg):
    on = suite.first.results["circle"].summary["min_tension"]
    res_off = run_scenario(get_scenario("circle", cfg), cfg, tension_loop=False)
    off = res_off.summary["min_tension"]
    ok = on >= 0.5 and off < 0.5
    _report("criterion 8 (slack-avoidance A/B)", ok,
            f"regulated_min_tension={on:.4f} (>=0.5), "
            f"unregulated_min_tension={off:.4f} (<0.5)")


def test_c09_imu_assisted_estimate_after_payload(suite):
    s = suite.first.results["payload-pickup"].summary
    corr, unc = s["ori_err_corrected_deg"], s["ori_err_uncorrected_deg"]
    ok = corr < 0.5 and unc >= 3.0 * corr
    _report("criterion 9 (payload estimator assist)", ok,
            f"corrected={corr:.3f}deg (<0.5), uncorrected={unc:.3f}deg "
            f"(>=3x corrected, ratio={unc / corr:.2f})")


def test_c10_mass_estimate_convergence(cfg):
    from dataclasses import replace

    res = run_scenario(get_scenario("hover-hold", cfg),
                       replace(cfg, m_hat_init=0.8))
    t = res.column("t")
    m_hat = res.column("m_hat")
    in_band = (m_hat >= 1.1) & (m_hat <= 1.3)
    entered = np.argmax(in_band) if in_band.any() else None
    stays = bool(entered is not None and in_band[entered:].all())
    t_enter = float(t[entered]) if entered is not None else float("inf")
    ok = stays and t_enter < 10.0
    _report("criterion 10 (mass-estimate convergence)", ok,
            f"m_hat(0)=0.8, enters [1.1,1.3] at t={t_enter:.2f}s (<10), "
            f"stays={stays}, final={m_hat[-1]:.4f}")


def test_c11_determinism_and_runtime(suite):
    identical = []
    for name, path_a in suite.first.csv_paths.items():
        with open(path_a, "rb") as fa, open(suite.second.csv_paths[name], "rb") as fb:
            identical.append(fa.read() == fb.read())
    walls = (suite.first.wall_time, suite.second.wall_time)
    ok = all(identical) and max(walls) < 60.0
    _report("criterion 11 (determinism and runtime)", ok,
            f"byte_identical={sum(identical)}/{len(identical)} scenario CSVs, "
            f"suite_wall={walls[0]:.1f}s/{walls[1]:.1f}s (<60 each)")
