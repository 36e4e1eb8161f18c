"""SE(3) pose algebra: composition, inversion, relative motion, rotation
angle and timestamped trajectory interpolation.

Quaternions are stored (w, x, y, z) with unit norm and canonical sign
(w >= 0; for w == 0 the first nonzero vector component is positive), so two
equal rotations always compare bit-equal.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

_NORM_TOL = 1e-6


def _canonical(q):
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise ValueError(f"quaternion must have 4 components, got shape {q.shape}")
    norm = math.sqrt(float(q @ q))
    if not math.isfinite(norm) or abs(norm - 1.0) > _NORM_TOL:
        raise ValueError(f"quaternion norm {norm} too far from 1")
    q = q / norm
    for component in q:
        if component > 0.0:
            break
        if component < 0.0:
            q = -q
            break
    return q


def quat_multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, vec):
    """Rotate a 3-vector by a unit quaternion."""
    w, x, y, z = q
    qv = np.array([x, y, z])
    t = 2.0 * np.cross(qv, vec)
    return vec + w * t + np.cross(qv, t)


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(rot):
    """Rotation matrix to quaternion via the largest-diagonal branch."""
    rot = np.asarray(rot, dtype=np.float64)
    t = np.trace(rot)
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (rot[2, 1] - rot[1, 2]) / s,
                      (rot[0, 2] - rot[2, 0]) / s,
                      (rot[1, 0] - rot[0, 1]) / s])
    elif rot[0, 0] > rot[1, 1] and rot[0, 0] > rot[2, 2]:
        s = math.sqrt(1.0 + rot[0, 0] - rot[1, 1] - rot[2, 2]) * 2.0
        q = np.array([(rot[2, 1] - rot[1, 2]) / s,
                      0.25 * s,
                      (rot[0, 1] + rot[1, 0]) / s,
                      (rot[0, 2] + rot[2, 0]) / s])
    elif rot[1, 1] > rot[2, 2]:
        s = math.sqrt(1.0 + rot[1, 1] - rot[0, 0] - rot[2, 2]) * 2.0
        q = np.array([(rot[0, 2] - rot[2, 0]) / s,
                      (rot[0, 1] + rot[1, 0]) / s,
                      0.25 * s,
                      (rot[1, 2] + rot[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + rot[2, 2] - rot[0, 0] - rot[1, 1]) * 2.0
        q = np.array([(rot[1, 0] - rot[0, 1]) / s,
                      (rot[0, 2] + rot[2, 0]) / s,
                      (rot[1, 2] + rot[2, 1]) / s,
                      0.25 * s])
    return q / math.sqrt(float(q @ q))


def slerp(q0, q1, s):
    """Shortest-arc spherical interpolation between two unit quaternions."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(q0 @ q1)
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    dot = min(dot, 1.0)
    theta = math.acos(dot)
    if theta < 1e-9:
        out = (1.0 - s) * q0 + s * q1
        return out / math.sqrt(float(out @ out))
    sin_theta = math.sin(theta)
    return (math.sin((1.0 - s) * theta) / sin_theta) * q0 \
        + (math.sin(s * theta) / sin_theta) * q1


@dataclass(frozen=True)
class Pose:
    """Rigid transform: unit quaternion (w, x, y, z) plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = _canonical(self.rotation)
        t = np.asarray(self.translation, dtype=np.float64)
        if t.shape != (3,):
            raise ValueError(f"translation must have 3 components, got shape {t.shape}")
        if not np.isfinite(t).all():
            raise ValueError("non-finite translation")
        q.setflags(write=False)
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    def matrix(self):
        """4x4 homogeneous matrix."""
        mat = np.eye(4)
        mat[:3, :3] = quat_to_matrix(self.rotation)
        mat[:3, 3] = self.translation
        return mat

    @classmethod
    def from_matrix(cls, mat):
        mat = np.asarray(mat, dtype=np.float64)
        return cls(matrix_to_quat(mat[:3, :3]), mat[:3, 3])


def compose(a: Pose, b: Pose) -> Pose:
    """Chained transform a . b (apply b, then a)."""
    return Pose(quat_multiply(a.rotation, b.rotation),
                quat_rotate(a.rotation, b.translation) + a.translation)


def inverse(p: Pose) -> Pose:
    conj = quat_conjugate(p.rotation)
    return Pose(conj, -quat_rotate(conj, p.translation))


def relative(p_i: Pose, p_j: Pose) -> Pose:
    """Motion from pose i to pose j expressed in frame i: inverse(p_i) . p_j."""
    return compose(inverse(p_i), p_j)


def rotation_angle(p: Pose) -> float:
    """Absolute rotation angle in [0, pi] radians."""
    q = p.rotation
    vec_norm = math.sqrt(float(q[1] * q[1] + q[2] * q[2] + q[3] * q[3]))
    return 2.0 * math.atan2(vec_norm, abs(float(q[0])))


def euler_rpy_to_pose(roll, pitch, yaw, translation=(0.0, 0.0, 0.0)) -> Pose:
    """Extrinsic X-Y-Z Euler angles to a pose: R = Rz(yaw) Ry(pitch) Rx(roll)."""
    cr, sr = math.cos(roll / 2.0), math.sin(roll / 2.0)
    cp, sp = math.cos(pitch / 2.0), math.sin(pitch / 2.0)
    cy, sy = math.cos(yaw / 2.0), math.sin(yaw / 2.0)
    qx = np.array([cr, sr, 0.0, 0.0])
    qy = np.array([cp, 0.0, sp, 0.0])
    qz = np.array([cy, 0.0, 0.0, sy])
    return Pose(quat_multiply(qz, quat_multiply(qy, qx)),
                np.asarray(translation, dtype=np.float64))


@dataclass(frozen=True)
class Trajectory:
    """Timestamp-ordered pose sequence; timestamps strictly increasing, seconds."""

    times: np.ndarray
    poses: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        poses = tuple(self.poses)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("trajectory must contain at least one sample")
        if times.size != len(poses):
            raise ValueError("timestamp / pose count mismatch")
        if not np.isfinite(times).all():
            raise ValueError("non-finite timestamp")
        if times.size > 1 and not (np.diff(times) > 0).all():
            raise ValueError("timestamps must be strictly increasing")
        times = times.copy()
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "poses", poses)

    def __len__(self):
        return len(self.poses)

    def translations(self):
        """(N, 3) array of translations."""
        return np.array([p.translation for p in self.poses])


def interpolate(traj: Trajectory, t: float) -> Pose:
    """Pose at time t: linear in translation, spherical in rotation.

    Exact samples are returned as stored; extrapolation outside the
    trajectory's time span is refused.
    """
    t = float(t)
    times = traj.times
    if t < times[0] or t > times[-1]:
        raise ValueError(
            f"extrapolation forbidden: {t} outside [{times[0]}, {times[-1]}]"
        )
    idx = bisect.bisect_left(times, t)
    if idx < len(times) and times[idx] == t:
        return traj.poses[idx]
    lo, hi = traj.poses[idx - 1], traj.poses[idx]
    s = (t - times[idx - 1]) / (times[idx] - times[idx - 1])
    return Pose(slerp(lo.rotation, hi.rotation, s),
                (1.0 - s) * lo.translation + s * hi.translation)
