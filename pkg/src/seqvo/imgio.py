"""Image file I/O: 8/16-bit PNG and binary PGM, normalized to [0, 1] on load."""

from __future__ import annotations

import re
from pathlib import Path

import cv2
import numpy as np

from .flowcore import Image


def load_image(path) -> Image:
    """Load a PNG or PGM image as float64 intensities in [0, 1]."""
    return load_image_and_depth(path)[0]


def load_image_and_depth(path):
    """Load an image plus its source bit depth (8 or 16)."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return _read_pgm(path)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        if not path.exists():
            raise FileNotFoundError(str(path))
        raise ValueError(f"unreadable image file: {path}")
    if raw.dtype == np.uint8:
        scale, depth = 255.0, 8
    elif raw.dtype == np.uint16:
        scale, depth = 65535.0, 16
    else:
        raise ValueError(f"unsupported image depth {raw.dtype} in {path}")
    if raw.ndim == 3:
        if raw.shape[2] == 4:
            raw = raw[:, :, :3]
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    return Image(raw.astype(np.float64) / scale), depth


def save_image(path, img: Image, bit_depth: int = 16):
    """Write an Image as PNG (8 or 16 bit) or binary PGM (grayscale only).

    Masked-out pixels are written as 0; the mask itself is not stored (use
    save_mask alongside when it matters).
    """
    path = Path(path)
    if bit_depth == 8:
        dtype, maxval = np.uint8, 255
    elif bit_depth == 16:
        dtype, maxval = np.uint16, 65535
    else:
        raise ValueError(f"bit depth must be 8 or 16, got {bit_depth}")
    quant = np.rint(img.data * maxval).astype(dtype)
    if path.suffix.lower() == ".pgm":
        if img.channels != 1:
            raise ValueError("PGM supports grayscale images only")
        _write_pgm(path, quant, maxval)
        return
    if img.channels == 3:
        quant = cv2.cvtColor(quant, cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(str(path), quant):
        raise ValueError(f"failed to write image: {path}")


def save_mask(path, mask: np.ndarray):
    """Write a boolean mask as an 8-bit PNG (255 = valid)."""
    arr = np.where(mask, 255, 0).astype(np.uint8)
    if not cv2.imwrite(str(Path(path)), arr):
        raise ValueError(f"failed to write mask: {path}")


# Binary PGM (P5): 16-bit samples are big-endian per the Netpbm convention.

def _read_pgm(path: Path):
    data = path.read_bytes()
    m = re.match(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError(f"not a binary PGM file: {path}")
    width, height, maxval = (int(g) for g in m.groups())
    if not 0 < maxval < 65536:
        raise ValueError(f"bad PGM maxval {maxval} in {path}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    pixels = np.frombuffer(data, dtype=dtype, count=height * width, offset=m.end())
    if pixels.size < height * width:
        raise ValueError(f"truncated PGM payload in {path}")
    grid = pixels.reshape(height, width).astype(np.float64) / maxval
    return Image(grid), (16 if maxval > 255 else 8)


def _write_pgm(path: Path, quant: np.ndarray, maxval: int):
    header = f"P5\n{quant.shape[1]} {quant.shape[0]}\n{maxval}\n".encode()
    payload = quant.astype(">u2" if maxval > 255 else "u1").tobytes()
    path.write_bytes(header + payload)
