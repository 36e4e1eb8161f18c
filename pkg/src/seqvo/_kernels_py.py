"""Pure-NumPy fallback for the masked bilinear gather kernel.

Mirrors ``seqvo._native.gather_bilinear`` expression for expression so both
backends produce bit-identical IEEE-754 results; keep the two in sync.
"""

import numpy as np


def gather_bilinear(values, mask, xs, ys):
    """Sample a masked multi-channel grid at continuous pixel coordinates.

    values : (C, H, W) float64, the field being sampled
    mask   : (H, W) uint8, per-cell validity of the field
    xs, ys : (N,) float64 sample coordinates (x = column, y = row)

    Returns ``(vals, valid)`` where vals is (C, N) float64 and valid is
    (N,) uint8.  A sample is valid iff it lies inside the hull of pixel
    centers and all four interpolation neighbors are valid; samples exactly
    on the last row/column stay valid (the neighbor cell degenerates to
    weight zero).  Invalid samples yield 0.0.
    """
    c, h, w = values.shape
    n = xs.shape[0]

    inb = (xs >= 0.0) & (xs <= w - 1.0) & (ys >= 0.0) & (ys <= h - 1.0)
    xs = np.where(inb, xs, 0.0)
    ys = np.where(inb, ys, 0.0)

    x0f = np.clip(np.floor(xs), 0.0, float(max(w - 2, 0)))
    y0f = np.clip(np.floor(ys), 0.0, float(max(h - 2, 0)))
    x0 = x0f.astype(np.intp)
    y0 = y0f.astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0f
    fy = ys - y0f

    valid = inb & (mask[y0, x0] != 0) & (mask[y0, x1] != 0)
    valid &= (mask[y1, x0] != 0) & (mask[y1, x1] != 0)

    w00 = (1.0 - fy) * (1.0 - fx)
    w01 = (1.0 - fy) * fx
    w10 = fy * (1.0 - fx)
    w11 = fy * fx

    vals = np.empty((c, n), dtype=np.float64)
    for k in range(c):
        plane = values[k]
        vals[k] = w00 * plane[y0, x0] + w01 * plane[y0, x1] \
            + w10 * plane[y1, x0] + w11 * plane[y1, x1]
    vals[:, ~valid] = 0.0
    return vals, valid.astype(np.uint8)
