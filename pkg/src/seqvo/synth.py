"""Synthetic stereo sequences with analytic ground truth.

The scene is a smooth band-limited texture advected by a per-frame affine
map, imaged by a fronto-parallel constant-disparity stereo rig.  Because
the motion is affine, every temporal, skip and stereo flow has a closed
form, which makes the generator a tight oracle for the flow-composition
metrics.  Controlled corruptions (brightness flicker, trajectory drift)
turn it into an oracle for the loss and trajectory metrics as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flowcore import FlowField, Image, StereoFrame
from .se3 import Pose, Trajectory, compose, euler_rpy_to_pose, quat_multiply, relative

# Fixed band-limited frequency table (cycles/pixel); low frequencies keep
# bilinear-interpolation error far below any flicker signal.
_FREQS = np.array([
    [0.011, 0.007],
    [-0.017, 0.013],
    [0.023, -0.019],
    [0.005, 0.029],
    [-0.031, -0.011],
    [0.037, 0.017],
])
_AMPS = np.array([0.13, 0.10, 0.08, 0.06, 0.05, 0.03])


@dataclass(frozen=True)
class AffineMotion:
    """Per-frame pixel motion: rotate/scale about the image center, then shift."""

    rotation: float = 0.0
    scale: float = 1.0
    translation: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "translation",
                           (float(self.translation[0]), float(self.translation[1])))

    def linear(self):
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return self.scale * np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class PathSpec:
    """Parametric camera path sampled at the frame rate."""

    kind: str = "line"
    speed: float = 1.0
    frame_rate: float = 10.0
    radius: float = 50.0

    def __post_init__(self):
        if self.kind not in ("line", "circle"):
            raise ValueError(f"path kind must be 'line' or 'circle', got {self.kind!r}")
        if self.speed < 0 or self.frame_rate <= 0 or self.radius <= 0:
            raise ValueError("speed must be >= 0, frame_rate and radius > 0")


@dataclass(frozen=True)
class SynthSpec:
    width: int = 128
    height: int = 96
    frames: int = 20
    motion: AffineMotion = field(default_factory=AffineMotion)
    disparity: float = 4.0
    seed: int = 0
    flicker: tuple = None
    path: PathSpec = field(default_factory=PathSpec)
    flow_direction: str = "source"

    def __post_init__(self):
        if self.frames < 3:
            raise ValueError(f"need at least 3 frames, got {self.frames}")
        if self.width < 2 or self.height < 2:
            raise ValueError("frames must be at least 2x2 pixels")
        if self.disparity < 0:
            raise ValueError(f"disparity must be >= 0, got {self.disparity}")
        if self.flow_direction not in ("source", "target"):
            raise ValueError(
                f"flow_direction must be 'source' or 'target', got {self.flow_direction!r}"
            )
        if self.flicker is not None:
            gains = tuple(float(g) for g in self.flicker)
            if len(gains) != self.frames:
                raise ValueError(
                    f"flicker needs one gain per frame ({self.frames}), got {len(gains)}"
                )
            if any(g <= 0 for g in gains):
                raise ValueError("flicker gains must be > 0")
            object.__setattr__(self, "flicker", gains)


@dataclass(frozen=True)
class SynthSequence:
    """Generated frames, analytic flows (per the spec's convention) and path."""

    frames: tuple
    tmp_left: tuple
    tmp_right: tuple
    skip_left: tuple
    stereo: tuple
    trajectory: Trajectory
    flow_direction: str


class _Texture:
    """Smooth scene texture: seeded sum of sinusoids, values in [0, 1]."""

    def __init__(self, seed):
        rng = np.random.default_rng(seed)
        self.phases = rng.uniform(0.0, 2.0 * math.pi, len(_FREQS))

    def __call__(self, xs, ys):
        val = np.full_like(xs, 0.5)
        for (fx, fy), amp, phase in zip(_FREQS, _AMPS, self.phases):
            val = val + amp * np.sin(2.0 * math.pi * (fx * xs + fy * ys) + phase)
        return np.clip(val, 0.0, 1.0)


class _AffineChain:
    """Closed-form powers of the one-step affine pixel map."""

    def __init__(self, motion: AffineMotion, width, height):
        self.center = np.array([(width - 1) / 2.0, (height - 1) / 2.0])
        self.lin = motion.linear()
        self.shift = np.asarray(motion.translation, dtype=np.float64)

    def _apply(self, lin, shift, xs, ys):
        cx, cy = self.center
        dx = xs - cx
        dy = ys - cy
        out_x = lin[0, 0] * dx + lin[0, 1] * dy + cx + shift[0]
        out_y = lin[1, 0] * dx + lin[1, 1] * dy + cy + shift[1]
        return out_x, out_y

    def power(self, k):
        """(linear, shift) of the k-step map; negative k inverts."""
        lin = np.eye(2)
        shift = np.zeros(2)
        step_lin = self.lin if k >= 0 else np.linalg.inv(self.lin)
        step_shift = self.shift if k >= 0 else -np.linalg.inv(self.lin) @ self.shift
        for _ in range(abs(k)):
            lin = step_lin @ lin
            shift = step_lin @ shift + step_shift
        return lin, shift

    def map_points(self, k, xs, ys):
        lin, shift = self.power(k)
        return self._apply(lin, shift, xs, ys)


def _grid(width, height):
    gy, gx = np.mgrid[0:height, 0:width]
    return gx.astype(np.float64), gy.astype(np.float64)


def _flow_from_map(chain, steps, gx, gy, offset_x=0.0):
    """Flow whose vectors follow the k-step map applied at an x-offset.

    offset_x shifts the anchor into the other stereo camera: the vector at p
    is  map(p + offset) - offset - p.
    """
    tx, ty = chain.map_points(steps, gx + offset_x, gy)
    return FlowField(tx - offset_x - gx, ty - gy)


def gen_sequence(spec: SynthSpec) -> SynthSequence:
    """Render the synthetic stereo sequence with its analytic flows and path.

    Flow conventions ('source' anchors a pair's flow at its earlier/right
    frame, 'target' at the later/left frame) match what the consistency
    metrics and the warping losses expect, respectively.
    """
    width, height, n = spec.width, spec.height, spec.frames
    texture = _Texture(spec.seed)
    chain = _AffineChain(spec.motion, width, height)
    gx, gy = _grid(width, height)
    gains = spec.flicker or (1.0,) * n
    disp = float(spec.disparity)

    frames = []
    for k in range(n):
        # Content at pixel p of frame k originated at the inverse k-step map.
        lx, ly = chain.map_points(-k, gx, gy)
        left = np.clip(gains[k] * texture(lx, ly), 0.0, 1.0)
        rx, ry = chain.map_points(-k, gx - disp, gy)
        right = np.clip(gains[k] * texture(rx, ry), 0.0, 1.0)
        frames.append(StereoFrame(timestamp=k / spec.path.frame_rate,
                                  left=Image(left), right=Image(right)))

    fwd = spec.flow_direction == "source"
    step = 1 if fwd else -1
    # Stereo flow between a frame's right and left image: constant
    # (-disparity, 0) anchored at the right image, (+disparity, 0) at the left.
    stereo_u = -disp if fwd else disp

    def any_sample_in_bounds(flow):
        return bool(((gx + flow.u >= 0) & (gx + flow.u <= width - 1)
                     & (gy + flow.v >= 0) & (gy + flow.v <= height - 1)).any())

    tmp_left = tuple(_flow_from_map(chain, step, gx, gy) for _ in range(n - 1))
    tmp_right = tuple(_flow_from_map(chain, step, gx, gy, offset_x=-disp)
                      for _ in range(n - 1))
    skip_left = tuple(_flow_from_map(chain, 2 * step, gx, gy) for _ in range(n - 2))
    stereo = tuple(FlowField.constant(height, width, stereo_u, 0.0) for _ in range(n))

    for flow in (tmp_left[0], tmp_right[0], skip_left[0], stereo[0]):
        if not any_sample_in_bounds(flow):
            raise ValueError("motion pushes every pixel out of frame")

    trajectory = _path_trajectory(spec.path, n)
    return SynthSequence(
        frames=tuple(frames),
        tmp_left=tmp_left,
        tmp_right=tmp_right,
        skip_left=skip_left,
        stereo=stereo,
        trajectory=trajectory,
        flow_direction=spec.flow_direction,
    )


def _path_trajectory(path: PathSpec, n) -> Trajectory:
    times = np.arange(n, dtype=np.float64) / path.frame_rate
    poses = []
    for t in times:
        dist = path.speed * t
        if path.kind == "line":
            poses.append(Pose(np.array([1.0, 0.0, 0.0, 0.0]),
                              np.array([dist, 0.0, 0.0])))
        else:
            theta = dist / path.radius
            pos = np.array([path.radius * math.sin(theta),
                            path.radius * (1.0 - math.cos(theta)), 0.0])
            poses.append(euler_rpy_to_pose(0.0, 0.0, theta, pos))
    return Trajectory(times, tuple(poses))


def perturb_trajectory(traj: Trajectory, scale_drift: float = 0.0,
                       rot_drift: float = 0.0, seed: int = 0,
                       noise_std: float = 0.0) -> Trajectory:
    """Deterministically corrupt a trajectory through its relative motions.

    Each step's translation is scaled by (1 + scale_drift), accumulating
    scale_drift meters of error per meter traveled; each step additionally
    rotates by rot_drift radians per meter about +z.  Optional Gaussian
    translation noise (noise_std meters, seeded) is added per step before
    re-chaining.
    """
    rng = np.random.default_rng(seed)
    poses = [traj.poses[0]]
    for prev, curr in zip(traj.poses, traj.poses[1:]):
        rel = relative(prev, curr)
        step_len = float(np.linalg.norm(rel.translation))
        angle = rot_drift * step_len
        drift_q = np.array([math.cos(angle / 2.0), 0.0, 0.0, math.sin(angle / 2.0)])
        trans = (1.0 + scale_drift) * rel.translation
        if noise_std > 0.0:
            trans = trans + rng.normal(0.0, noise_std, 3)
        new_rel = Pose(quat_multiply(drift_q, rel.rotation), trans)
        poses.append(compose(poses[-1], new_rel))
    return Trajectory(traj.times.copy(), tuple(poses))
