import numpy as np
import pytest

from soccerwalk.geom import InvalidDurationError, Pose2
from soccerwalk.swing import swing_trajectory


def test_march_in_place_planar_constant():
    pose = Pose2(0.1, -0.05, 0.3)
    traj = swing_trajectory(pose, pose, 0.0, 0.02, 0.36)
    for t in np.linspace(0, 0.36, 37):
        p = traj.pose(t)
        assert p.almost_equal(pose, tol=1e-12)
    assert traj.height(0.18) == pytest.approx(0.02, abs=1e-12)
    assert traj.height(0.0) == pytest.approx(0.0, abs=1e-12)
    assert traj.height(0.36) == pytest.approx(0.0, abs=1e-12)


def test_five_by_five_centimeter_step():
    start = Pose2(0.0, 0.0, 0.0)
    end = Pose2(0.05, 0.05, 0.0)
    traj = swing_trajectory(start, end, 0.0, 0.03, 0.36)
    assert traj.pose(0.0).almost_equal(start, tol=1e-12)
    assert traj.pose(0.36).almost_equal(end, tol=1e-12)
    assert np.allclose(traj.planar_velocity(0.0), 0.0, atol=1e-12)
    assert np.allclose(traj.planar_velocity(0.36), 0.0, atol=1e-12)
    t1, t2 = traj.phase_times
    assert t1 == pytest.approx(0.35 * 0.36, rel=1e-12)
    assert t2 == pytest.approx(0.65 * 0.36, rel=1e-12)
    # apex held over the whole plateau
    for t in np.linspace(t1, t2, 50):
        assert traj.height(t) == pytest.approx(0.03, abs=1e-12)
        assert traj.height_velocity(t) == 0.0
    # monotone rise and fall outside the plateau
    hs = [traj.height(t) for t in np.linspace(0, t1, 30)]
    assert all(b >= a - 1e-12 for a, b in zip(hs, hs[1:]))
    hs = [traj.height(t) for t in np.linspace(t2, 0.36, 30)]
    assert all(b <= a + 1e-12 for a, b in zip(hs, hs[1:]))


def test_height_nonnegative_and_apex_only_in_plateau():
    traj = swing_trajectory(Pose2(), Pose2(0.08, -0.04, 0.2), 0.0, 0.025, 0.36)
    t1, t2 = traj.phase_times
    for t in np.linspace(0, 0.36, 200):
        h = traj.height(t)
        assert h >= -1e-12
        if t < t1 - 1e-9 or t > t2 + 1e-9:
            assert h < 0.025 - 1e-12 or np.isclose(t, t1) or np.isclose(t, t2)


def test_velocity_continuity_at_phase_joins():
    traj = swing_trajectory(Pose2(), Pose2(0.05, 0.05, 0.1), 0.0, 0.03, 0.36)
    t1, t2 = traj.phase_times
    eps = 1e-8
    for tj in (t1, t2):
        before = (traj.height(tj) - traj.height(tj - eps)) / eps
        after = (traj.height(tj + eps) - traj.height(tj)) / eps
        assert abs(before - after) < 1e-6
        assert abs(traj.height_velocity(tj)) < 1e-6


def test_dense_finite_difference_velocity_match():
    traj = swing_trajectory(Pose2(), Pose2(0.06, -0.02, 0.15), 0.0, 0.02, 0.36)
    eps = 1e-7
    for t in np.linspace(eps, 0.36 - eps, 300):
        fd = (traj.height(t + eps) - traj.height(t - eps)) / (2 * eps)
        assert abs(fd - traj.height_velocity(t)) < 1e-5


def test_ground_offset():
    traj = swing_trajectory(Pose2(), Pose2(0.05, 0, 0), 0.12, 0.02, 0.36)
    assert traj.height(0.0) == pytest.approx(0.12, abs=1e-12)
    assert traj.height(0.18) == pytest.approx(0.14, abs=1e-12)
    assert traj.height(0.36) == pytest.approx(0.12, abs=1e-12)


def test_invalid_inputs():
    with pytest.raises(InvalidDurationError):
        swing_trajectory(Pose2(), Pose2(), 0.0, 0.02, 0.0)
    with pytest.raises(ValueError):
        swing_trajectory(Pose2(), Pose2(), 0.0, -0.01, 0.36)
    with pytest.raises(ValueError):
        swing_trajectory(Pose2(), Pose2(), 0.0, 0.02, 0.36, plateau_ratio=1.0)


def test_yaw_wraps_shortest_way():
    start = Pose2(0, 0, 3.0)
    end = Pose2(0, 0, -3.0)  # shortest path crosses pi
    traj = swing_trajectory(start, end, 0.0, 0.02, 0.36)
    mid_yaw = traj.pose(0.18).theta
    assert abs(mid_yaw) > 3.0  # goes through +/- pi, not through zero
