"""Dense image and optical-flow types plus the sampling operators on them.

All values are float64 internally; intensities live in [0, 1]; flow
displacements are in pixels.  Every grid carries a boolean validity mask and
every statistic downstream is computed over valid cells only, so
out-of-bounds samples never fabricate border values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .kernels import gather_bilinear

FLO_MAGIC = 202021.25

# BT.601 luma weights for RGB -> grayscale.
_LUMA = np.array([0.299, 0.587, 0.114])


class FlowFileError(Exception):
    """Malformed, truncated or otherwise unreadable .flo data."""


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _full_mask(shape):
    return np.ones(shape, dtype=bool)


@dataclass(frozen=True)
class Image:
    """Dense intensity grid, grayscale (H, W) or RGB (H, W, 3), in [0, 1].

    ``mask`` marks which pixels hold meaningful data; invalid pixels are
    stored as 0 and excluded from every statistic.
    """

    data: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            pass
        elif data.ndim == 3 and data.shape[2] == 3:
            pass
        else:
            raise ValueError(
                f"image data must be (H, W) or (H, W, 3), got {data.shape}"
            )
        mask = self.mask
        if mask is None:
            mask = _full_mask(data.shape[:2])
        else:
            mask = np.asarray(mask, dtype=bool)
        if mask.shape != data.shape[:2]:
            raise ValueError(
                f"mask shape {mask.shape} does not match image {data.shape[:2]}"
            )
        valid = data[mask]
        if valid.size:
            if not np.isfinite(valid).all():
                raise ValueError("non-finite intensity in valid pixels")
            if valid.min() < 0.0 or valid.max() > 1.0:
                raise ValueError("valid intensities must lie in [0, 1]")
        data = data.copy()
        data[~mask] = 0.0
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "mask", _frozen(mask))

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return 1 if self.data.ndim == 2 else self.data.shape[2]

    def planes(self):
        """Channel-major (C, H, W) float64 view for the sampling kernel."""
        if self.data.ndim == 2:
            return self.data[None, :, :]
        return np.ascontiguousarray(np.moveaxis(self.data, 2, 0))


@dataclass(frozen=True)
class FlowField:
    """Per-pixel displacement field: u is horizontal (+x), v vertical (+y).

    A field is anchored to the grid of its first/output frame; the vector at
    p points to the matching position p + (u, v) in the other frame.
    """

    u: np.ndarray
    v: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.ndim != 2 or u.shape != v.shape:
            raise ValueError(f"u/v must be equal (H, W) grids, got {u.shape} vs {v.shape}")
        mask = self.mask
        if mask is None:
            mask = _full_mask(u.shape)
        else:
            mask = np.asarray(mask, dtype=bool)
        if mask.shape != u.shape:
            raise ValueError(f"mask shape {mask.shape} does not match flow {u.shape}")
        if not (np.isfinite(u[mask]).all() and np.isfinite(v[mask]).all()):
            raise ValueError("non-finite flow components in valid cells")
        u = u.copy()
        v = v.copy()
        u[~mask] = 0.0
        v[~mask] = 0.0
        object.__setattr__(self, "u", _frozen(u))
        object.__setattr__(self, "v", _frozen(v))
        object.__setattr__(self, "mask", _frozen(mask))

    @property
    def height(self):
        return self.u.shape[0]

    @property
    def width(self):
        return self.u.shape[1]

    @classmethod
    def zeros(cls, height, width):
        z = np.zeros((height, width))
        return cls(z, z.copy())

    @classmethod
    def constant(cls, height, width, du, dv):
        return cls(np.full((height, width), float(du)),
                   np.full((height, width), float(dv)))


@dataclass(frozen=True)
class StereoFrame:
    """A timestamped rectified stereo pair."""

    timestamp: float
    left: Image
    right: Image

    def __post_init__(self):
        if (self.left.height, self.left.width) != (self.right.height, self.right.width):
            raise ValueError("left and right images must have identical dimensions")


class EpeResult(NamedTuple):
    """Per-pixel endpoint-error map with its statistics over valid cells."""

    error: np.ndarray
    mask: np.ndarray
    mean: float
    median: float
    count: int


def _check_same_grid(a, b, what):
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError(
            f"{what}: dimension mismatch {(a.height, a.width)} vs {(b.height, b.width)}"
        )


def _grid_coords(height, width):
    gy, gx = np.mgrid[0:height, 0:width]
    return gx.astype(np.float64), gy.astype(np.float64)


def bilinear_sample(img: Image, x: float, y: float):
    """Bilinear interpolation of ``img`` at the continuous point (x, y).

    Returns ``(values, valid)`` with one value per channel; ``valid`` is
    False when the point falls outside the pixel-center hull or any
    interpolation neighbor is masked out.
    """
    xs = np.array([float(x)])
    ys = np.array([float(y)])
    vals, valid = gather_bilinear(img.planes(), img.mask, xs, ys)
    return vals[:, 0].copy(), bool(valid[0])


def warp_backward(src: Image, flow: FlowField) -> Image:
    """Resample ``src`` at positions displaced by ``flow``.

    The output lives on the flow's grid: out(p) = src(p + flow(p)).  Pixels
    whose sample lands outside ``src`` (or on masked-out data, or whose flow
    cell is invalid) are masked out of the result.
    """
    _check_same_grid(src, flow, "warp_backward")
    gx, gy = _grid_coords(flow.height, flow.width)
    xs = (gx + flow.u).ravel()
    ys = (gy + flow.v).ravel()
    vals, valid = gather_bilinear(src.planes(), src.mask, xs, ys)
    valid = valid & flow.mask.ravel()
    mask = valid.reshape(flow.height, flow.width)
    if src.channels == 1:
        data = vals[0].reshape(flow.height, flow.width)
    else:
        data = np.moveaxis(vals.reshape(3, flow.height, flow.width), 0, 2)
    return Image(data, mask)


def compose_flows(w1: FlowField, w2: FlowField) -> FlowField:
    """Chain two displacement fields on the grid of the first.

    (w1 (+) w2)(p) = w1(p) + w2(p + w1(p)), with w2 sampled bilinearly.
    The result is masked wherever the sample of w2 is invalid or either
    input cell is.
    """
    _check_same_grid(w1, w2, "compose_flows")
    gx, gy = _grid_coords(w1.height, w1.width)
    xs = (gx + w1.u).ravel()
    ys = (gy + w1.v).ravel()
    planes = np.stack([w2.u, w2.v])
    vals, valid = gather_bilinear(planes, w2.mask, xs, ys)
    mask = (valid & w1.mask.ravel()).reshape(w1.height, w1.width)
    u = w1.u + vals[0].reshape(w1.height, w1.width)
    v = w1.v + vals[1].reshape(w1.height, w1.width)
    return FlowField(u, v, mask)


def epe(w1: FlowField, w2: FlowField) -> EpeResult:
    """Endpoint error ||w1 - w2||_2 per pixel over the joint valid mask."""
    _check_same_grid(w1, w2, "epe")
    mask = w1.mask & w2.mask
    count = int(mask.sum())
    if count == 0:
        raise ValueError("epe: empty comparison (no jointly valid pixels)")
    error = np.hypot(w1.u - w2.u, w1.v - w2.v)
    error[~mask] = 0.0
    valid = error[mask]
    return EpeResult(error, mask, float(valid.mean()), float(np.median(valid)), count)


def crop_bottom(img: Image, rows: int) -> Image:
    """Drop ``rows`` pixel rows from the bottom of the image."""
    rows = int(rows)
    if rows < 0 or rows >= img.height:
        raise ValueError(f"crop rows {rows} out of range for height {img.height}")
    if rows == 0:
        return img
    return Image(img.data[: img.height - rows].copy(),
                 img.mask[: img.height - rows].copy())


def crop_bottom_flow(flow: FlowField, rows: int) -> FlowField:
    """Drop ``rows`` rows from the bottom of a flow field (vectors unchanged)."""
    rows = int(rows)
    if rows < 0 or rows >= flow.height:
        raise ValueError(f"crop rows {rows} out of range for height {flow.height}")
    if rows == 0:
        return flow
    h = flow.height - rows
    return FlowField(flow.u[:h].copy(), flow.v[:h].copy(), flow.mask[:h].copy())


def to_grayscale(img: Image) -> Image:
    """BT.601 luma conversion; grayscale images pass through unchanged."""
    if img.channels == 1:
        return img
    gray = img.data @ _LUMA
    # Weights sum to 1 but rounding can nudge values a hair past the ends.
    return Image(np.clip(gray, 0.0, 1.0), img.mask.copy())


def read_flo(data: bytes) -> FlowField:
    """Parse a little-endian .flo byte stream.

    Layout: float32 magic 202021.25, int32 width, int32 height, then
    row-major interleaved float32 (u, v).  The format carries no validity
    channel, so the returned mask is all-true; non-finite payloads are
    rejected.
    """
    if len(data) < 12:
        raise FlowFileError("truncated flow file: missing header")
    magic, width, height = struct.unpack("<fii", data[:12])
    if magic != FLO_MAGIC:
        raise FlowFileError(f"not a flow file (magic {magic!r})")
    if width <= 0 or height <= 0:
        raise FlowFileError(f"not a flow file (bad dimensions {width}x{height})")
    expected = 12 + 8 * width * height
    if len(data) < expected:
        raise FlowFileError(
            f"truncated flow file: expected {expected} bytes, got {len(data)}"
        )
    payload = np.frombuffer(data[12:expected], dtype="<f4").reshape(height, width, 2)
    uv = payload.astype(np.float64)
    if not np.isfinite(uv).all():
        raise FlowFileError("flow file contains non-finite values")
    return FlowField(uv[:, :, 0], uv[:, :, 1])


def write_flo(flow: FlowField) -> bytes:
    """Serialize to .flo bytes (see read_flo); the mask is not stored."""
    header = struct.pack("<fii", FLO_MAGIC, flow.width, flow.height)
    payload = np.empty((flow.height, flow.width, 2), dtype="<f4")
    payload[:, :, 0] = flow.u
    payload[:, :, 1] = flow.v
    return header + payload.tobytes()


def load_flo(path) -> FlowField:
    with open(path, "rb") as fh:
        return read_flo(fh.read())


def save_flo(path, flow: FlowField):
    with open(path, "wb") as fh:
        fh.write(write_flo(flow))
