import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeroarm.errors import UnreachablePointError
from aeroarm.pcc import (ALPHA_SWITCH, ArmConfig, RigidPose, SegmentConfig, _arc_xyz,
                         canonical_segment, compose_chain, end_effector_world_pose,
                         segment_config_from_tip, segment_tip_displacement,
                         segment_transform)
from aeroarm.rotations import rot_y, rot_z

L = 0.05


def test_straight_segment_is_pure_translation():
    pose = segment_transform(SegmentConfig(0.0, 0.0, L))
    np.testing.assert_allclose(pose.rotation, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(pose.translation, [0.0, 0.0, L], atol=1e-15)


def test_quarter_circle_analytic_case():
    # a 90-degree arc in the x-z plane: both tip coordinates equal 2L/pi
    pose = segment_transform(SegmentConfig(np.pi / 2, 0.0, L))
    np.testing.assert_allclose(pose.translation, [2 * L / np.pi, 0.0, 2 * L / np.pi],
                               atol=1e-14)
    np.testing.assert_allclose(pose.rotation, rot_y(np.pi / 2), atol=1e-14)


def test_transform_rotation_is_orthonormal(rng):
    for _ in range(100):
        cfg = SegmentConfig(rng.uniform(0, np.pi / 2), rng.uniform(-np.pi, np.pi), L)
        segment_transform(cfg).validate(tol=1e-12)


def test_beta_rotates_the_bending_plane(rng):
    alpha = 0.7
    base = segment_transform(SegmentConfig(alpha, 0.0, L))
    for beta in rng.uniform(-np.pi, np.pi, 20):
        pose = segment_transform(SegmentConfig(alpha, beta, L))
        np.testing.assert_allclose(pose.translation, rot_z(beta) @ base.translation,
                                   atol=1e-14)
        np.testing.assert_allclose(pose.rotation,
                                   rot_z(beta) @ base.rotation @ rot_z(-beta), atol=1e-13)


@given(st.floats(1e-3, np.pi / 2), st.floats(-np.pi + 1e-9, np.pi))
@settings(max_examples=200, derandomize=True)
def test_tip_round_trip(alpha, beta):
    cfg = SegmentConfig(alpha, beta, L)
    rec = segment_config_from_tip(segment_tip_displacement(cfg), L)
    assert abs(rec.alpha - alpha) < 1e-9
    # beta is undefined information-free when alpha -> 0; compare via sin/cos
    assert abs(np.sin(rec.beta) - np.sin(beta)) < 1e-6
    assert abs(np.cos(rec.beta) - np.cos(beta)) < 1e-6


def test_unreachable_points_raise():
    with pytest.raises(UnreachablePointError):
        segment_config_from_tip(np.zeros(3), L)
    with pytest.raises(UnreachablePointError):
        segment_config_from_tip(np.array([0.0, 0.0, 2 * L]), L)
    with pytest.raises(UnreachablePointError):
        # correct direction but chord inconsistent with the arc length
        segment_config_from_tip(np.array([0.02, 0.0, 0.01]), L)


def test_taylor_branch_matches_closed_form():
    """Both arc-displacement branches agree to 1e-8 through the handover band."""
    worst = 0.0
    for alpha in np.linspace(0.005, 0.02, 301):
        rc = L * (1.0 - np.cos(alpha)) / alpha
        ac = L * np.sin(alpha) / alpha
        rt, at = _arc_xyz(alpha, L)
        if alpha >= ALPHA_SWITCH:  # force the polynomial branch for comparison
            a2 = alpha * alpha
            rt = L * alpha * (a2 * a2 - 30.0 * a2 + 360.0) / 720.0
            at = L * (a2 * a2 - 20.0 * a2 + 120.0) / 120.0
        worst = max(worst, abs(rt - rc), abs(at - ac))
    assert worst < 1e-8


def test_no_discontinuity_at_branch_switch():
    eps = 1e-12
    lo = _arc_xyz(ALPHA_SWITCH - eps, L)
    hi = _arc_xyz(ALPHA_SWITCH + eps, L)
    assert abs(lo[0] - hi[0]) < 1e-9
    assert abs(lo[1] - hi[1]) < 1e-9


def test_chain_subdivision_invariance(rng):
    """Splitting one arc into k equal sub-arcs leaves the tip pose unchanged."""
    for _ in range(20):
        alpha = rng.uniform(0.1, np.pi / 2)
        beta = rng.uniform(-np.pi, np.pi)
        whole = segment_transform(SegmentConfig(alpha, beta, L))
        for k in (2, 5):
            split = compose_chain(ArmConfig.uniform(alpha / k, beta, n=k, length=L / k))[-1]
            np.testing.assert_allclose(split.rotation, whole.rotation, atol=1e-12)
            np.testing.assert_allclose(split.translation, whole.translation, atol=1e-12)


def test_compose_chain_matches_sequential_composition(rng):
    segs = tuple(SegmentConfig(rng.uniform(0, 1.0), rng.uniform(-np.pi, np.pi), L)
                 for _ in range(5))
    poses = compose_chain(ArmConfig(segs))
    cur = RigidPose.identity()
    for seg, pose in zip(segs, poses):
        cur = cur.compose(segment_transform(seg))
        np.testing.assert_allclose(pose.matrix(), cur.matrix(), atol=1e-14)


def test_canonical_segment_negative_alpha_same_arc():
    a, b = 0.4, 0.3
    canon = canonical_segment(-a, b, L)
    assert canon.alpha == a
    direct = segment_transform(SegmentConfig(a, b + np.pi - 2 * np.pi * (b + np.pi > np.pi), L))
    via = segment_transform(canon)
    np.testing.assert_allclose(via.matrix(), direct.matrix(), atol=1e-14)


def test_end_effector_world_pose_composes_mount():
    arm = ArmConfig.straight(n=3, length=L)
    uav = RigidPose(rot_z(0.5), np.array([1.0, 2.0, 3.0]))
    mount = RigidPose(rot_y(0.2), np.array([0.0, 0.0, -0.04]))
    ee = end_effector_world_pose(uav, mount, arm)
    expect = uav.compose(mount).compose(RigidPose(np.eye(3), [0, 0, 3 * L]))
    np.testing.assert_allclose(ee.matrix(), expect.matrix(), atol=1e-14)


def test_segment_config_validation():
    with pytest.raises(ValueError):
        SegmentConfig(-0.1, 0.0, L)
    with pytest.raises(ValueError):
        SegmentConfig(0.1, 4.0, L)
    with pytest.raises(ValueError):
        SegmentConfig(0.1, 0.0, -L)
    with pytest.raises(ValueError):
        RigidPose(2 * np.eye(3), np.zeros(3)).validate()
