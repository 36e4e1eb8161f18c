"""Trajectory text formats.

TUM style:   `timestamp tx ty tz qx qy qz qw` per line, `#` comments.
KITTI style: 12 floats per line (row-major 3x4 [R|t]), implicit frame index
             used as the timestamp.
GPS/INS CSV: header `timestamp,northing,easting,down,roll,pitch,yaw`,
             timestamps in microseconds (converted to seconds on load),
             position mapped to (x, y, z) = (northing, easting, down).
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .se3 import Pose, Trajectory, euler_rpy_to_pose, matrix_to_quat, quat_to_matrix

GPS_INS_HEADER = ["timestamp", "northing", "easting", "down", "roll", "pitch", "yaw"]


def parse_tum(text: str) -> Trajectory:
    times = []
    poses = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 8:
            raise ValueError(f"TUM line {lineno}: expected 8 fields, got {len(parts)}")
        vals = [float(p) for p in parts]
        times.append(vals[0])
        tx, ty, tz, qx, qy, qz, qw = vals[1:]
        poses.append(Pose(np.array([qw, qx, qy, qz]), np.array([tx, ty, tz])))
    if not poses:
        raise ValueError("empty TUM trajectory")
    return Trajectory(np.array(times), tuple(poses))


def format_tum(traj: Trajectory) -> str:
    lines = []
    for t, pose in zip(traj.times, traj.poses):
        qw, qx, qy, qz = pose.rotation
        tx, ty, tz = pose.translation
        lines.append(" ".join(f"{v:.17g}" for v in (t, tx, ty, tz, qx, qy, qz, qw)))
    return "\n".join(lines) + "\n"


def parse_kitti(text: str) -> Trajectory:
    poses = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 12:
            raise ValueError(f"KITTI line {lineno}: expected 12 fields, got {len(parts)}")
        mat = np.array([float(p) for p in parts]).reshape(3, 4)
        poses.append(Pose(matrix_to_quat(mat[:, :3]), mat[:, 3]))
    if not poses:
        raise ValueError("empty KITTI trajectory")
    return Trajectory(np.arange(len(poses), dtype=np.float64), tuple(poses))


def format_kitti(traj: Trajectory) -> str:
    lines = []
    for pose in traj.poses:
        mat = np.empty((3, 4))
        mat[:, :3] = quat_to_matrix(pose.rotation)
        mat[:, 3] = pose.translation
        lines.append(" ".join(f"{v:.17g}" for v in mat.ravel()))
    return "\n".join(lines) + "\n"


def parse_gps_ins_csv(text: str) -> Trajectory:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty GPS/INS CSV") from None
    header = [h.strip() for h in header]
    if header != GPS_INS_HEADER:
        raise ValueError(
            f"GPS/INS CSV header must be {','.join(GPS_INS_HEADER)}, got {','.join(header)}"
        )
    times = []
    poses = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 7:
            raise ValueError(f"GPS/INS CSV line {lineno}: expected 7 fields, got {len(row)}")
        stamp_us, northing, easting, down, roll, pitch, yaw = (float(v) for v in row)
        times.append(stamp_us * 1e-6)
        poses.append(euler_rpy_to_pose(roll, pitch, yaw, (northing, easting, down)))
    if not poses:
        raise ValueError("GPS/INS CSV contains no samples")
    return Trajectory(np.array(times), tuple(poses))


def _detect_format(path: Path, text: str) -> str:
    if path.suffix.lower() == ".csv":
        return "gps_ins"
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        n = len(line.split())
        if n == 12:
            return "kitti"
        if n == 8:
            return "tum"
        break
    raise ValueError(f"cannot detect trajectory format of {path}")


def load_trajectory(path, fmt: str = "auto") -> Trajectory:
    """Load a trajectory file; fmt is 'tum', 'kitti', 'gps_ins' or 'auto'."""
    path = Path(path)
    text = path.read_text()
    if fmt == "auto":
        fmt = _detect_format(path, text)
    if fmt == "tum":
        return parse_tum(text)
    if fmt == "kitti":
        return parse_kitti(text)
    if fmt == "gps_ins":
        return parse_gps_ins_csv(text)
    raise ValueError(f"unknown trajectory format: {fmt}")


def save_tum(path, traj: Trajectory):
    Path(path).write_text(format_tum(traj))


def save_kitti(path, traj: Trajectory):
    Path(path).write_text(format_kitti(traj))
