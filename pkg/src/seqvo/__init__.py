"""Consistency metrics, warping losses and trajectory evaluation for stereo sequences."""

from .flowcore import (
    FlowField,
    FlowFileError,
    Image,
    StereoFrame,
    bilinear_sample,
    compose_flows,
    crop_bottom,
    epe,
    read_flo,
    warp_backward,
    write_flo,
)
from .consistency import (
    ConsistencyReport,
    LossWeights,
    ScoreMap,
    adversarial_loss,
    cycle_loss,
    image_consistency_f,
    sequence_report,
    ssim,
    stereo_consistency_epe,
    stereo_loss,
    temporal_consistency_epe,
    temporal_loss,
    total_loss,
)
from .kernels import backend
from .se3 import Pose, Trajectory, compose, euler_rpy_to_pose, interpolate, relative, rotation_angle
from .synth import AffineMotion, PathSpec, SynthSpec, gen_sequence, perturb_trajectory
from .voeval import absolute_rmse, associate, build_pairs, path_length, relative_errors

__version__ = "0.1.0"

__all__ = [
    "AffineMotion",
    "ConsistencyReport",
    "FlowField",
    "FlowFileError",
    "Image",
    "LossWeights",
    "PathSpec",
    "Pose",
    "ScoreMap",
    "StereoFrame",
    "SynthSpec",
    "Trajectory",
    "absolute_rmse",
    "adversarial_loss",
    "associate",
    "backend",
    "bilinear_sample",
    "build_pairs",
    "compose",
    "compose_flows",
    "crop_bottom",
    "cycle_loss",
    "epe",
    "euler_rpy_to_pose",
    "gen_sequence",
    "image_consistency_f",
    "interpolate",
    "path_length",
    "perturb_trajectory",
    "read_flo",
    "relative",
    "relative_errors",
    "rotation_angle",
    "sequence_report",
    "ssim",
    "stereo_consistency_epe",
    "stereo_loss",
    "temporal_consistency_epe",
    "temporal_loss",
    "total_loss",
    "warp_backward",
    "write_flo",
    "__version__",
]
