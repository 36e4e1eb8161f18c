"""Selects the sampling-kernel backend at import time.

The compiled Cython kernel is preferred when the extension built; otherwise
the NumPy fallback is used.  Both produce bit-identical results, so the
choice only affects speed.  Override with ``SEQVO_BACKEND=python|compiled``.
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _native
except ImportError:  # extension not built
    _native = None


def _select():
    choice = os.environ.get("SEQVO_BACKEND", "auto")
    if choice == "python":
        return "python", _kernels_py.gather_bilinear
    if choice == "compiled":
        if _native is None:
            raise ImportError(
                "SEQVO_BACKEND=compiled but the seqvo._native extension is "
                "not built; reinstall with Cython and a C compiler available"
            )
        return "compiled", _native.gather_bilinear
    if choice != "auto":
        raise ValueError(f"unknown SEQVO_BACKEND value: {choice!r}")
    if _native is not None:
        return "compiled", _native.gather_bilinear
    return "python", _kernels_py.gather_bilinear


BACKEND, _gather = _select()


def backend():
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return BACKEND


def available_backends():
    """Mapping of backend name to its raw gather function (for benchmarks)."""
    out = {"python": _kernels_py.gather_bilinear}
    if _native is not None:
        out["compiled"] = _native.gather_bilinear
    return out


def gather_bilinear(values, mask, xs, ys):
    """Masked bilinear sampling of a (C, H, W) field at (N,) coordinates.

    Normalizes dtypes/contiguity and dispatches to the active backend.
    Returns ``(vals (C, N) float64, valid (N,) bool)``.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    vals, valid = _gather(values, mask, xs, ys)
    return vals, valid.view(bool)
