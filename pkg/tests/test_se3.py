"""Pose algebra tests; matrix representations serve as the independent oracle."""

import math

import numpy as np
import pytest

from seqvo import se3


def random_pose(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return se3.Pose(q, rng.normal(scale=3.0, size=3))


def pose_close(a, b, tol=1e-12):
    dq = min(np.abs(a.rotation - b.rotation).max(),
             np.abs(a.rotation + b.rotation).max())
    dt = np.abs(a.translation - b.translation).max()
    return dq <= tol and dt <= tol


class TestCompose:
    def test_identity_neutral(self, rng):
        p = random_pose(rng)
        assert pose_close(se3.compose(se3.Pose.identity(), p), p)
        assert pose_close(se3.compose(p, se3.Pose.identity()), p)

    def test_inverse_cancels(self, rng):
        for _ in range(20):
            p = random_pose(rng)
            assert pose_close(se3.compose(p, se3.inverse(p)), se3.Pose.identity())

    def test_matches_matrix_product(self, rng):
        for _ in range(50):
            a, b = random_pose(rng), random_pose(rng)
            got = se3.compose(a, b).matrix()
            want = a.matrix() @ b.matrix()
            assert np.allclose(got, want, atol=1e-12)

    def test_associative(self, rng):
        for _ in range(20):
            a, b, c = (random_pose(rng) for _ in range(3))
            left = se3.compose(se3.compose(a, b), c)
            right = se3.compose(a, se3.compose(b, c))
            assert pose_close(left, right, tol=1e-12)


class TestRelative:
    def test_self_is_identity(self, rng):
        p = random_pose(rng)
        assert pose_close(se3.relative(p, p), se3.Pose.identity())

    def test_from_identity(self, rng):
        p = random_pose(rng)
        assert pose_close(se3.relative(se3.Pose.identity(), p), p)

    def test_pure_translations_subtract(self):
        a = se3.Pose(np.array([1.0, 0, 0, 0]), np.array([1.0, 2.0, 3.0]))
        b = se3.Pose(np.array([1.0, 0, 0, 0]), np.array([4.0, 4.0, 4.0]))
        rel = se3.relative(a, b)
        assert np.allclose(rel.translation, [3.0, 2.0, 1.0])

    def test_recovers_target(self, rng):
        for _ in range(20):
            a, b = random_pose(rng), random_pose(rng)
            assert pose_close(se3.compose(a, se3.relative(a, b)), b, tol=1e-12)

    def test_invariant_under_left_transform(self, rng):
        t = random_pose(rng)
        for _ in range(20):
            a, b = random_pose(rng), random_pose(rng)
            rel = se3.relative(a, b)
            rel_t = se3.relative(se3.compose(t, a), se3.compose(t, b))
            assert pose_close(rel, rel_t, tol=1e-12)


class TestRotationAngle:
    def test_identity_zero(self):
        assert se3.rotation_angle(se3.Pose.identity()) == 0.0

    def test_quarter_turn(self):
        p = se3.euler_rpy_to_pose(0.0, 0.0, math.pi / 2)
        assert se3.rotation_angle(p) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_matches_trace_formula(self, rng):
        for _ in range(100):
            p = random_pose(rng)
            rot = se3.quat_to_matrix(p.rotation)
            want = math.acos(np.clip((np.trace(rot) - 1.0) / 2.0, -1.0, 1.0))
            assert se3.rotation_angle(p) == pytest.approx(want, abs=1e-9)

    def test_inverse_same_angle(self, rng):
        p = random_pose(rng)
        assert se3.rotation_angle(se3.inverse(p)) == pytest.approx(
            se3.rotation_angle(p), abs=1e-12)


class TestEuler:
    def test_zeros_identity(self):
        assert pose_close(se3.euler_rpy_to_pose(0, 0, 0), se3.Pose.identity())

    def test_yaw_maps_x_to_y(self):
        p = se3.euler_rpy_to_pose(0.0, 0.0, math.pi / 2)
        assert np.allclose(se3.quat_rotate(p.rotation, [1.0, 0, 0]), [0, 1.0, 0],
                           atol=1e-12)

    def test_matches_axis_matrices(self, rng):
        def rx(a):
            return np.array([[1, 0, 0], [0, math.cos(a), -math.sin(a)],
                             [0, math.sin(a), math.cos(a)]])

        def ry(a):
            return np.array([[math.cos(a), 0, math.sin(a)], [0, 1, 0],
                             [-math.sin(a), 0, math.cos(a)]])

        def rz(a):
            return np.array([[math.cos(a), -math.sin(a), 0],
                             [math.sin(a), math.cos(a), 0], [0, 0, 1]])

        for _ in range(50):
            roll, pitch, yaw = rng.uniform(-math.pi, math.pi, 3)
            got = se3.quat_to_matrix(se3.euler_rpy_to_pose(roll, pitch, yaw).rotation)
            assert np.allclose(got, rz(yaw) @ ry(pitch) @ rx(roll), atol=1e-12)


class TestQuaternionConventions:
    def test_canonical_sign(self, rng):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        if q[0] > 0:
            q = -q
        p = se3.Pose(q, np.zeros(3))
        assert p.rotation[0] >= 0.0

    def test_norm_validated(self):
        with pytest.raises(ValueError, match="norm"):
            se3.Pose(np.array([2.0, 0, 0, 0.5]), np.zeros(3))

    def test_matrix_roundtrip(self, rng):
        for _ in range(100):
            p = random_pose(rng)
            back = se3.Pose.from_matrix(p.matrix())
            assert pose_close(p, back, tol=1e-12)


class TestInterpolate:
    def make_traj(self):
        poses = (
            se3.Pose.identity(),
            se3.euler_rpy_to_pose(0, 0, math.pi / 2, (2.0, 0.0, 0.0)),
            se3.euler_rpy_to_pose(0, 0, math.pi, (2.0, 2.0, 0.0)),
        )
        return se3.Trajectory(np.array([0.0, 1.0, 2.0]), poses)

    def test_endpoint_bit_exact(self):
        traj = self.make_traj()
        for k, t in enumerate(traj.times):
            pose = se3.interpolate(traj, t)
            assert pose is traj.poses[k]

    def test_midpoint_slerp_lerp(self):
        traj = self.make_traj()
        mid = se3.interpolate(traj, 0.5)
        want_q = np.array([math.cos(math.pi / 8), 0.0, 0.0, math.sin(math.pi / 8)])
        assert np.allclose(mid.rotation, want_q, atol=1e-12)
        assert np.allclose(mid.translation, [1.0, 0.0, 0.0], atol=1e-12)

    def test_quarter_point_matches_axis_angle_oracle(self, rng):
        for _ in range(30):
            q0 = rng.normal(size=4)
            q0 /= np.linalg.norm(q0)
            q1 = rng.normal(size=4)
            q1 /= np.linalg.norm(q1)
            traj = se3.Trajectory(np.array([0.0, 1.0]),
                                  (se3.Pose(q0, np.zeros(3)), se3.Pose(q1, np.zeros(3))))
            got = se3.interpolate(traj, 0.25)
            # oracle: rotate q0 by a quarter of the relative axis-angle motion
            c0 = traj.poses[0].rotation
            c1 = traj.poses[1].rotation
            if float(c0 @ c1) < 0:
                c1 = -c1
            rel = se3.quat_multiply(se3.quat_conjugate(c0), c1)
            angle = 2.0 * math.atan2(np.linalg.norm(rel[1:]), rel[0])
            if angle > 1e-12:
                axis = rel[1:] / np.linalg.norm(rel[1:])
            else:
                axis = np.array([1.0, 0.0, 0.0])
            part = np.concatenate([[math.cos(angle / 8)], math.sin(angle / 8) * axis])
            want = se3.quat_multiply(c0, part)
            diff = min(np.abs(got.rotation - want).max(),
                       np.abs(got.rotation + want).max())
            assert diff < 1e-9

    def test_extrapolation_rejected(self):
        traj = self.make_traj()
        with pytest.raises(ValueError, match="extrapolation forbidden"):
            se3.interpolate(traj, -0.1)
        with pytest.raises(ValueError, match="extrapolation forbidden"):
            se3.interpolate(traj, 2.1)

    def test_continuity(self, rng):
        traj = self.make_traj()
        # velocity bound: max step translation 2 m/s, rotation pi/2 rad/s
        for _ in range(100):
            t = rng.uniform(0.0, 2.0 - 1e-4)
            dt = rng.uniform(0.0, 1e-4)
            a = se3.interpolate(traj, t)
            b = se3.interpolate(traj, t + dt)
            gap = se3.relative(a, b)
            assert np.linalg.norm(gap.translation) <= 3.0 * dt + 1e-12
            assert se3.rotation_angle(gap) <= 2.0 * dt + 1e-12


class TestTrajectory:
    def test_strictly_increasing_enforced(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            se3.Trajectory(np.array([0.0, 0.0]),
                           (se3.Pose.identity(), se3.Pose.identity()))

    def test_non_empty(self):
        with pytest.raises(ValueError):
            se3.Trajectory(np.array([]), ())
