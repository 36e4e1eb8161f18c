"""Trajectory association and error metrics.

Relative errors follow the length-binned sub-trajectory protocol: for every
frame pair (i, j) spanning a target ground-truth path length, the error pose
is  E = (est_j (-) est_i) (-) (gt_j (-) gt_i)  with (-) the inverse
compositional operator (b (-) a = a^-1 . b).  The translational error is
reported as percent of segment length, the rotational error in degrees per
100 m (raw unnormalized means are kept alongside).  Absolute errors are
RMSE over per-pose residuals, optionally after closed-form rigid alignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .se3 import Pose, Trajectory, compose, inverse, relative, rotation_angle

DEFAULT_LENGTHS = (100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0)


@dataclass(frozen=True)
class PairSet:
    """Frame-index pairs whose ground-truth path length reaches a target."""

    pairs: tuple
    target_length: float

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        for i, j in pairs:
            if i >= j:
                raise ValueError(f"pair ({i}, {j}) must satisfy i < j")
        object.__setattr__(self, "pairs", pairs)


@dataclass(frozen=True)
class RelativeErrors:
    """Length-normalized and raw relative errors over a pair population."""

    t_rel_percent: float
    r_rel_deg_per_100m: float
    t_raw_m: float
    r_raw_deg: float
    pair_count: int


@dataclass(frozen=True)
class VoMetrics:
    """One evaluated estimate: relative and absolute trajectory errors."""

    t_rel: float
    r_rel: float
    t_abs: float
    r_abs: float
    t_raw_m: float
    r_raw_deg: float
    pair_count: int
    lengths: tuple = field(default_factory=tuple)


def associate(gt: Trajectory, est: Trajectory, max_dt: float):
    """Greedy nearest-timestamp matching, each sample used at most once.

    Candidate pairs within ``max_dt`` are taken globally in order of
    increasing |dt|, ties broken toward the earlier estimate timestamp.
    Returns (gt_index, est_index) pairs sorted by gt index.
    """
    if max_dt < 0:
        raise ValueError("max_dt must be >= 0")
    est_times = est.times
    candidates = []
    for gi, t in enumerate(gt.times):
        lo = int(np.searchsorted(est_times, t - max_dt, side="left"))
        hi = int(np.searchsorted(est_times, t + max_dt, side="right"))
        for ei in range(lo, hi):
            dt = abs(float(est_times[ei] - t))
            if dt <= max_dt:
                candidates.append((dt, float(est_times[ei]), float(t), gi, ei))
    candidates.sort()
    used_gt = set()
    used_est = set()
    matches = []
    for _, _, _, gi, ei in candidates:
        if gi in used_gt or ei in used_est:
            continue
        used_gt.add(gi)
        used_est.add(ei)
        matches.append((gi, ei))
    if not matches:
        raise ValueError(f"association failed: no timestamp pairs within {max_dt} s")
    matches.sort()
    return matches


def path_length(traj: Trajectory, i: int, j: int) -> float:
    """Sum of consecutive translation distances from sample i to sample j."""
    if i > j:
        raise ValueError(f"path_length requires i <= j, got {i} > {j}")
    pts = traj.translations()[i : j + 1]
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def _cumulative_lengths(traj: Trajectory):
    pts = traj.translations()
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def build_pairs(gt: Trajectory, lengths=DEFAULT_LENGTHS, stride: int = 1):
    """For each start frame and target length, the first frame reaching it.

    Returns one PairSet per target length; lengths nobody reaches produce
    empty sets, and an error is raised when every set is empty.
    """
    lengths = tuple(float(l) for l in lengths)
    if not lengths or any(l <= 0 for l in lengths):
        raise ValueError("target lengths must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    cum = _cumulative_lengths(gt)
    sets = []
    for length in lengths:
        pairs = []
        for i in range(0, len(gt), stride):
            j = int(np.searchsorted(cum, cum[i] + length, side="left"))
            if j < len(cum):
                pairs.append((i, j))
        sets.append(PairSet(tuple(pairs), length))
    if all(not s.pairs for s in sets):
        raise ValueError(
            f"no pairs reachable for any target length {lengths} "
            f"(trajectory is {cum[-1]:.3f} m long)"
        )
    return sets


def relative_errors(gt: Trajectory, est: Trajectory, pair_sets) -> RelativeErrors:
    """Relative translational/rotational errors over length-binned pairs.

    Trajectories must already be associated index-to-index.  Per pair the
    translation error is normalized by the ground-truth segment length
    (x100 -> percent) and the rotation angle likewise (x100 -> deg/100 m);
    the unnormalized means are reported as well.
    """
    if len(gt) != len(est):
        raise ValueError("gt and est must be associated (equal length)")
    cum = _cumulative_lengths(gt)
    t_norm = []
    r_norm = []
    t_raw = []
    r_raw = []
    for pair_set in pair_sets:
        for i, j in pair_set.pairs:
            if j >= len(gt):
                raise ValueError(f"pair ({i}, {j}) outside trajectory of length {len(gt)}")
            seg = float(cum[j] - cum[i])
            if seg <= 0.0:
                continue
            rel_gt = relative(gt.poses[i], gt.poses[j])
            rel_est = relative(est.poses[i], est.poses[j])
            err = compose(inverse(rel_gt), rel_est)
            t_err = float(np.linalg.norm(err.translation))
            r_err = math.degrees(rotation_angle(err))
            t_norm.append(t_err / seg)
            r_norm.append(r_err / seg)
            t_raw.append(t_err)
            r_raw.append(r_err)
    if not t_norm:
        raise ValueError("relative_errors: empty pair set")
    return RelativeErrors(
        t_rel_percent=float(np.mean(t_norm)) * 100.0,
        r_rel_deg_per_100m=float(np.mean(r_norm)) * 100.0,
        t_raw_m=float(np.mean(t_raw)),
        r_raw_deg=float(np.mean(r_raw)),
        pair_count=len(t_norm),
    )


def rigid_align(src_points, dst_points):
    """Closed-form rigid registration (rotation + translation, no scale).

    Finds R, t minimizing sum ||dst - (R src + t)||^2 via SVD of the
    cross-covariance.  Requires >= 3 non-collinear points.
    """
    src = np.asarray(src_points, dtype=np.float64)
    dst = np.asarray(dst_points, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError("alignment expects matching (N, 3) point sets")
    if len(src) < 3:
        raise ValueError("alignment needs at least 3 point pairs")
    mu_src = src.mean(axis=0)
    mu_dst = dst.mean(axis=0)
    cov = (dst - mu_dst).T @ (src - mu_src)
    u_svd, s_svd, vt_svd = np.linalg.svd(cov)
    if s_svd[0] <= 0.0 or s_svd[1] <= 1e-9 * s_svd[0]:
        raise ValueError("degenerate alignment: points are collinear or coincident")
    sign = np.eye(3)
    if np.linalg.det(u_svd) * np.linalg.det(vt_svd) < 0:
        sign[2, 2] = -1.0
    rot = u_svd @ sign @ vt_svd
    trans = mu_dst - rot @ mu_src
    return rot, trans


def absolute_rmse(gt: Trajectory, est: Trajectory, align: bool = True):
    """Absolute translation (m) and rotation (deg) RMSE over paired poses.

    With ``align`` a single best-fit rigid transform is applied to the
    estimate first, absorbing any global offset.
    """
    if len(gt) != len(est):
        raise ValueError("gt and est must be associated (equal length)")
    gt_pts = gt.translations()
    est_pts = est.translations()
    est_poses = est.poses
    if align:
        rot, trans = rigid_align(est_pts, gt_pts)
        align_pose = Pose.from_matrix(
            np.block([[rot, trans[:, None]], [np.zeros((1, 3)), np.ones((1, 1))]])
        )
        est_poses = tuple(compose(align_pose, p) for p in est_poses)
        est_pts = np.array([p.translation for p in est_poses])
    t_res = np.linalg.norm(gt_pts - est_pts, axis=1)
    r_res = np.array([
        math.degrees(rotation_angle(relative(g, e)))
        for g, e in zip(gt.poses, est_poses)
    ])
    t_abs = float(np.sqrt((t_res**2).mean()))
    r_abs = float(np.sqrt((r_res**2).mean()))
    return t_abs, r_abs


def associate_trajectories(gt: Trajectory, est: Trajectory, max_dt: float):
    """Match by timestamp and return the paired sub-trajectories."""
    matches = associate(gt, est, max_dt)
    # Crossing matches (possible on pathological timestamp sets) would break
    # the monotone-trajectory invariant; keep the first consistent subset.
    gt_idx = []
    est_idx = []
    last_est = -1
    for gi, ei in matches:
        if ei > last_est:
            gt_idx.append(gi)
            est_idx.append(ei)
            last_est = ei
    gt_m = Trajectory(gt.times[gt_idx], tuple(gt.poses[k] for k in gt_idx))
    est_m = Trajectory(est.times[est_idx], tuple(est.poses[k] for k in est_idx))
    return gt_m, est_m


def evaluate(gt: Trajectory, est: Trajectory, lengths=DEFAULT_LENGTHS,
             stride: int = 1, max_dt: float = 0.02, align: bool = True) -> VoMetrics:
    """Associate, bin and evaluate one estimate against ground truth."""
    gt_m, est_m = associate_trajectories(gt, est, max_dt)
    pair_sets = build_pairs(gt_m, lengths, stride)
    rel = relative_errors(gt_m, est_m, pair_sets)
    t_abs, r_abs = absolute_rmse(gt_m, est_m, align=align)
    used = tuple(s.target_length for s in pair_sets if s.pairs)
    return VoMetrics(
        t_rel=rel.t_rel_percent,
        r_rel=rel.r_rel_deg_per_100m,
        t_abs=t_abs,
        r_abs=r_abs,
        t_raw_m=rel.t_raw_m,
        r_raw_deg=rel.r_raw_deg,
        pair_count=rel.pair_count,
        lengths=used,
    )
