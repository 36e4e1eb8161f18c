"""Image-consistency measure, loss terms and flow-based frame-consistency
metrics with sequence-level aggregation.

The consistency measure blends windowed structural similarity with mean
absolute difference:  f = alpha * (1 - SSIM) / 2 + (1 - alpha) * L1.
Temporal / stereo variants first re-align one image by backward warping.
The frame-consistency metrics compare a direct flow against the composition
of two step flows and reduce the endpoint error over valid pixels.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.ndimage import correlate1d

from .flowcore import (
    EpeResult,
    FlowField,
    Image,
    compose_flows,
    epe,
    to_grayscale,
    warp_backward,
)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_RANGE = 1.0


@dataclass(frozen=True)
class LossWeights:
    """Weights of the four loss terms plus the SSIM/L1 blend factor."""

    lambda_adv: float = 1.0
    lambda_cy: float = 10.0
    lambda_tmp: float = 3.0
    lambda_st: float = 3.0
    alpha: float = 0.8

    def __post_init__(self):
        for name in ("lambda_adv", "lambda_cy", "lambda_tmp", "lambda_st"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {val}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class ScoreMap:
    """Grid of per-patch discriminator responses."""

    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 2 or scores.size == 0:
            raise ValueError("score map must be a non-empty 2-D grid")
        if not np.isfinite(scores).all():
            raise ValueError("score map contains non-finite values")
        scores = scores.copy()
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)


class SsimResult(NamedTuple):
    map: np.ndarray
    mask: np.ndarray
    mean: float


class AdversarialLoss(NamedTuple):
    l_gen: float
    l_disc: float
    l_adv: float


def _gaussian_kernel():
    half = (SSIM_WINDOW - 1) // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * SSIM_SIGMA**2))
    return kernel / kernel.sum()


_KERNEL_1D = _gaussian_kernel()


def _blur(field):
    tmp = correlate1d(field, _KERNEL_1D, axis=0, mode="constant")
    return correlate1d(tmp, _KERNEL_1D, axis=1, mode="constant")


def ssim(a: Image, b: Image) -> SsimResult:
    """Windowed structural similarity over the joint valid region.

    Uses an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03 and dynamic
    range 1.0.  Window weights are renormalized over the valid neighborhood,
    so partially masked windows stay unbiased.  The per-pixel map is clipped
    to [-1, 1]; the mean runs over valid pixels only.
    """
    if a.channels != 1 or b.channels != 1:
        raise ValueError("ssim expects single-channel images")
    _check_pair(a, b, "ssim")
    mask = a.mask & b.mask
    if not mask.any():
        raise ValueError("ssim: no jointly valid pixels")

    mf = mask.astype(np.float64)
    den = _blur(mf)
    safe_den = np.where(den > 0.0, den, 1.0)

    def local(field):
        return _blur(field * mf) / safe_den

    xa = a.data
    xb = b.data
    mu_a = local(xa)
    mu_b = local(xb)
    var_a = local(xa * xa) - mu_a * mu_a
    var_b = local(xb * xb) - mu_b * mu_b
    cov = local(xa * xb) - mu_a * mu_b

    c1 = (SSIM_K1 * SSIM_RANGE) ** 2
    c2 = (SSIM_K2 * SSIM_RANGE) ** 2
    score = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) \
        / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
    score = np.clip(score, -1.0, 1.0)
    score[~mask] = 0.0
    return SsimResult(score, mask, float(score[mask].mean()))


def _check_pair(a: Image, b: Image, what):
    if (a.height, a.width, a.channels) != (b.height, b.width, b.channels):
        raise ValueError(
            f"{what}: dimension mismatch "
            f"{(a.height, a.width, a.channels)} vs {(b.height, b.width, b.channels)}"
        )


def image_consistency_f(a: Image, b: Image, alpha: float = 0.8) -> float:
    """Blended SSIM + L1 dissimilarity; 0 for identical images, <= 1 in [0,1].

    RGB inputs are converted to luma for the SSIM term; the L1 term averages
    over channels.  Statistics run over the jointly valid region.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    _check_pair(a, b, "image_consistency_f")
    mask = a.mask & b.mask
    if not mask.any():
        raise ValueError("image_consistency_f: no jointly valid pixels")
    ssim_mean = ssim(to_grayscale(a), to_grayscale(b)).mean
    diff = np.abs(a.data - b.data)
    l1 = float(diff[mask].mean())
    return alpha * (1.0 - ssim_mean) / 2.0 + (1.0 - alpha) * l1


def cycle_loss(x: Image, x_recon: Image, alpha: float = 0.8) -> float:
    """Consistency between an original image and its reconstruction."""
    return image_consistency_f(x, x_recon, alpha)


def temporal_loss(prev: Image, curr: Image, flow: FlowField, alpha: float = 0.8) -> float:
    """Consistency between the warped previous frame and the current frame.

    ``flow`` must live on the grid of ``curr`` and point to matching
    positions in ``prev`` (backward-warping convention).
    """
    warped = warp_backward(prev, flow)
    return image_consistency_f(warped, curr, alpha)


def stereo_loss(right: Image, left: Image, flow_r_to_l: FlowField, alpha: float = 0.8) -> float:
    """Consistency between the warped right image and the left image."""
    warped = warp_backward(right, flow_r_to_l)
    return image_consistency_f(warped, left, alpha)


def adversarial_loss(fake: ScoreMap, real: ScoreMap) -> AdversarialLoss:
    """Least-squares adversarial terms from patch score grids.

    l_gen  = mean((fake - 1)^2)
    l_disc = mean((real - 1)^2) + mean(fake^2)
    """
    l_gen = float(((fake.scores - 1.0) ** 2).mean())
    l_disc = float(((real.scores - 1.0) ** 2).mean()) + float((fake.scores**2).mean())
    return AdversarialLoss(l_gen, l_disc, l_gen + l_disc)


def total_loss(l_adv: float, l_cy: float, l_tmp: float, l_st: float,
               weights: LossWeights = LossWeights()) -> float:
    """Weighted sum of the four loss components."""
    parts = (l_adv, l_cy, l_tmp, l_st)
    if not all(math.isfinite(p) for p in parts):
        raise ValueError("loss components must be finite")
    return (weights.lambda_adv * l_adv + weights.lambda_cy * l_cy
            + weights.lambda_tmp * l_tmp + weights.lambda_st * l_st)


def temporal_consistency_epe(w_t_t2: FlowField, w_t_t1: FlowField,
                             w_t1_t2: FlowField) -> EpeResult:
    """Endpoint error between a skip flow and its two composed step flows."""
    return epe(w_t_t2, compose_flows(w_t_t1, w_t1_t2))


def stereo_consistency_epe(w_r_tr: FlowField, w_t1_rl: FlowField,
                           w_t_rl: FlowField, w_l_tl: FlowField) -> EpeResult:
    """Endpoint error between the two stereo/temporal composition paths.

    Path A chains the right-camera temporal flow with the next frame's
    stereo flow; path B chains this frame's stereo flow with the
    left-camera temporal flow.  Both land in the same frame, so their
    difference measures loop consistency.
    """
    path_a = compose_flows(w_r_tr, w_t1_rl)
    path_b = compose_flows(w_t_rl, w_l_tl)
    return epe(path_a, path_b)


@dataclass(frozen=True)
class FrameConsistency:
    """Per-frame consistency record; metrics not requested stay None."""

    frame: int
    e_tmp_mean: float | None = None
    e_tmp_median: float | None = None
    e_tmp_px: int | None = None
    e_st_mean: float | None = None
    e_st_median: float | None = None
    e_st_px: int | None = None

    @property
    def valid_px(self):
        """Smallest pixel count backing any metric in this record."""
        counts = [c for c in (self.e_tmp_px, self.e_st_px) if c is not None]
        return min(counts) if counts else 0


CSV_HEADER = "frame,e_tmp_mean,e_tmp_median,e_st_mean,e_st_median,valid_px"


@dataclass(frozen=True)
class ConsistencyReport:
    """Frame-indexed consistency records plus their aggregates."""

    records: tuple

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: r.frame))
        if not records:
            raise ValueError("consistency report must contain at least one record")
        object.__setattr__(self, "records", records)

    def aggregates(self):
        """Per metric: mean/median of per-frame means plus the pixel-pooled mean."""
        out = {}
        for name in ("e_tmp", "e_st"):
            means = [getattr(r, f"{name}_mean") for r in self.records]
            counts = [getattr(r, f"{name}_px") for r in self.records]
            if any(m is None for m in means):
                continue
            values = np.array(means)
            weights = np.array(counts, dtype=np.float64)
            out[name] = {
                "mean": float(values.mean()),
                "median": float(np.median(values)),
                "pooled_mean": float((values * weights).sum() / weights.sum()),
            }
        return out

    def to_csv(self, provenance=None) -> str:
        lines = _provenance_comments(provenance)
        lines.append(CSV_HEADER)
        for r in self.records:
            cells = [str(r.frame)]
            for val in (r.e_tmp_mean, r.e_tmp_median, r.e_st_mean, r.e_st_median):
                cells.append("" if val is None else repr(val))
            cells.append(str(r.valid_px))
            lines.append(",".join(cells))
        for name, agg in sorted(self.aggregates().items()):
            for key in ("mean", "median", "pooled_mean"):
                lines.append(f"# aggregate {name} {key} {agg[key]!r}")
        return "\n".join(lines) + "\n"

    def to_json_obj(self, provenance=None) -> dict:
        obj = {}
        if provenance is not None:
            obj["provenance"] = provenance
        obj["records"] = [
            {
                "frame": r.frame,
                "e_tmp_mean": r.e_tmp_mean,
                "e_tmp_median": r.e_tmp_median,
                "e_st_mean": r.e_st_mean,
                "e_st_median": r.e_st_median,
                "e_tmp_px": r.e_tmp_px,
                "e_st_px": r.e_st_px,
                "valid_px": r.valid_px,
            }
            for r in self.records
        ]
        obj["aggregates"] = self.aggregates()
        return obj


def _provenance_comments(provenance):
    if not provenance:
        return []
    lines = [f"# tool {provenance.get('tool', 'seqvo')} {provenance.get('version', '')}".rstrip()]
    for name, digest in sorted(provenance.get("inputs", {}).items()):
        lines.append(f"# input {name} sha256={digest}")
    for key, val in sorted(provenance.get("flags", {}).items()):
        lines.append(f"# flag {key}={val}")
    return lines


def sequence_report(manifest, metrics=("tmp", "st"), direction=None,
                    threads=1) -> ConsistencyReport:
    """Evaluate frame-consistency metrics across a manifest's sequence.

    ``direction`` overrides the manifest's flow convention: 'source' flows
    are anchored at the earlier/right frame of their pair, 'target' flows at
    the later/left frame (the backward-warping layout).  The composition
    order flips accordingly so both conventions close the same loop.
    Records cover every frame where all requested metrics are computable.
    """
    metrics = tuple(metrics)
    if not metrics or any(m not in ("tmp", "st") for m in metrics):
        raise ValueError(f"metric selection must be a subset of ('tmp', 'st'), got {metrics}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    direction = direction or manifest.flow_direction
    if direction not in ("source", "target"):
        raise ValueError(f"flow direction must be 'source' or 'target', got {direction!r}")

    n = len(manifest.frames)
    if "tmp" in metrics and n < 3:
        raise ValueError("sequence too short: temporal consistency needs >= 3 frames")
    if "st" in metrics and n < 2:
        raise ValueError("sequence too short: stereo consistency needs >= 2 frames")
    rows = n - 2 if "tmp" in metrics else n - 1

    def eval_frame(t):
        fields = {"frame": t}
        if "tmp" in metrics:
            skip = manifest.load_flow(t, "skip_left")
            step_a = manifest.load_flow(t, "tmp_left")
            step_b = manifest.load_flow(t + 1, "tmp_left")
            if direction == "target":
                step_a, step_b = step_b, step_a
            res = temporal_consistency_epe(skip, step_a, step_b)
            fields.update(e_tmp_mean=res.mean, e_tmp_median=res.median,
                          e_tmp_px=res.count)
        if "st" in metrics:
            tmp_r = manifest.load_flow(t, "tmp_right")
            tmp_l = manifest.load_flow(t, "tmp_left")
            st_t = manifest.load_flow(t, "stereo")
            st_t1 = manifest.load_flow(t + 1, "stereo")
            if direction == "source":
                res = stereo_consistency_epe(tmp_r, st_t1, st_t, tmp_l)
            else:
                res = stereo_consistency_epe(st_t1, tmp_r, tmp_l, st_t)
            fields.update(e_st_mean=res.mean, e_st_median=res.median,
                          e_st_px=res.count)
        return FrameConsistency(**fields)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(eval_frame, range(rows)))
    else:
        records = [eval_frame(t) for t in range(rows)]
    return ConsistencyReport(tuple(records))
