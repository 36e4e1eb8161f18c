# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled masked bilinear gather kernel.

Must stay bit-identical to ``seqvo._kernels_py.gather_bilinear``: same
clamping, same weight expressions, same summation order.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def gather_bilinear(const double[:, :, ::1] values,
                    const unsigned char[:, ::1] mask,
                    const double[::1] xs,
                    const double[::1] ys):
    """See seqvo._kernels_py.gather_bilinear for the contract."""
    cdef Py_ssize_t c = values.shape[0]
    cdef Py_ssize_t h = values.shape[1]
    cdef Py_ssize_t w = values.shape[2]
    cdef Py_ssize_t n = xs.shape[0]

    vals_arr = np.zeros((c, n), dtype=np.float64)
    valid_arr = np.zeros(n, dtype=np.uint8)
    cdef double[:, ::1] vals = vals_arr
    cdef unsigned char[::1] valid = valid_arr

    cdef Py_ssize_t i, k, x0, y0, x1, y1
    cdef double x, y, fx, fy, w00, w01, w10, w11

    with nogil:
        for i in range(n):
            x = xs[i]
            y = ys[i]
            if not (x >= 0.0 and x <= w - 1.0 and y >= 0.0 and y <= h - 1.0):
                continue
            x0 = <Py_ssize_t>floor(x)
            if x0 > w - 2:
                x0 = w - 2
            if x0 < 0:
                x0 = 0
            y0 = <Py_ssize_t>floor(y)
            if y0 > h - 2:
                y0 = h - 2
            if y0 < 0:
                y0 = 0
            x1 = x0 + 1
            if x1 > w - 1:
                x1 = w - 1
            y1 = y0 + 1
            if y1 > h - 1:
                y1 = h - 1

            if not (mask[y0, x0] and mask[y0, x1]
                    and mask[y1, x0] and mask[y1, x1]):
                continue

            fx = x - x0
            fy = y - y0
            w00 = (1.0 - fy) * (1.0 - fx)
            w01 = (1.0 - fy) * fx
            w10 = fy * (1.0 - fx)
            w11 = fy * fx

            valid[i] = 1
            for k in range(c):
                vals[k, i] = w00 * values[k, y0, x0] + w01 * values[k, y0, x1] \
                    + w10 * values[k, y1, x0] + w11 * values[k, y1, x1]

    return vals_arr, valid_arr
