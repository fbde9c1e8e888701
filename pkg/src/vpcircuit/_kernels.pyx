# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched circuit kernels.

Same contract and per-element operation order as ``_kernels_py``. The
forward pass sweeps layer by layer so each tape snapshot is one contiguous
copy; the backward pass walks one sample at a time with layers innermost.
"""

import numpy as np

from libc.math cimport sqrt
from libc.string cimport memcpy

from .errors import DegenerateAmplitudeError

cdef double INV_SQRT2 = 1.0 / sqrt(2.0)


cdef inline void _shift_row(double* x, double* y, const double* c,
                            const double* s, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    cdef double a, b
    for k in range(n):
        a = x[k]
        b = y[k]
        x[k] = a * c[k] - b * s[k]
        y[k] = a * s[k] + b * c[k]


cdef inline void _mix_row(double* x, double* y, Py_ssize_t start, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t j
    cdef double xj, yj, xk, yk
    j = start
    while j + 1 < n:
        xj = x[j]
        yj = y[j]
        xk = x[j + 1]
        yk = y[j + 1]
        x[j] = (xj - yk) * INV_SQRT2
        y[j] = (yj + xk) * INV_SQRT2
        x[j + 1] = (xk - yj) * INV_SQRT2
        y[j + 1] = (yk + xj) * INV_SQRT2
        j += 2


def forward_batch(const long[::1] ops, const long[::1] offsets, const double[::1] cos_t,
                  const double[::1] sin_t, re, im, bint record, double eps):
    cdef double[:, ::1] out_re = np.array(re, dtype=np.float64, order="C")
    cdef double[:, ::1] out_im = np.array(im, dtype=np.float64, order="C")
    cdef Py_ssize_t n_layers = ops.shape[0]
    cdef Py_ssize_t batch = out_re.shape[0]
    cdef Py_ssize_t n = out_re.shape[1]
    cdef Py_ssize_t b, layer, k
    cdef long op
    cdef double r
    cdef double[:, :, ::1] tr
    cdef double[:, :, ::1] ti
    tape_re = tape_im = None
    if record:
        tape_re = np.empty((n_layers, batch, n))
        tape_im = np.empty((n_layers, batch, n))
        tr = tape_re
        ti = tape_im
    for layer in range(n_layers):
        if record and batch * n > 0:
            memcpy(&tr[layer, 0, 0], &out_re[0, 0], batch * n * sizeof(double))
            memcpy(&ti[layer, 0, 0], &out_im[0, 0], batch * n * sizeof(double))
        op = ops[layer]
        for b in range(batch):
            if op == 0:
                _shift_row(&out_re[b, 0], &out_im[b, 0], &cos_t[offsets[layer]], &sin_t[offsets[layer]], n)
            elif op == 1 or op == 2:
                _mix_row(&out_re[b, 0], &out_im[b, 0], op - 1, n)
            else:
                for k in range(n):
                    r = sqrt(out_re[b, k] * out_re[b, k] + out_im[b, k] * out_im[b, k])
                    if r < eps:
                        raise DegenerateAmplitudeError(int(k), float(r), sample=int(b))
                    out_re[b, k] = out_re[b, k] / r
                    out_im[b, k] = out_im[b, k] / r
    return np.asarray(out_re), np.asarray(out_im), tape_re, tape_im


def backward_batch(const long[::1] ops, const long[::1] offsets, const double[::1] cos_t,
                   const double[::1] sin_t, const double[:, :, ::1] tape_re,
                   const double[:, :, ::1] tape_im, cot_re, cot_im, Py_ssize_t n_params, double eps):
    cdef Py_ssize_t n_layers = tape_re.shape[0]
    cdef Py_ssize_t batch = tape_re.shape[1]
    cdef Py_ssize_t n = tape_re.shape[2]
    grad_arr = np.zeros((batch, n_params))
    cdef double[:, ::1] grad = grad_arr
    cdef double[:, ::1] cr = np.array(cot_re, dtype=np.float64, order="C")
    cdef double[:, ::1] ci = np.array(cot_im, dtype=np.float64, order="C")
    cdef Py_ssize_t b, layer, k, j, o
    cdef long op
    cdef double x, y, c, s, wx, wy, a, d, r, t
    cdef double crj, cij, crk, cik
    for b in range(batch):
        for layer in range(n_layers - 1, -1, -1):
            op = ops[layer]
            if op == 0:
                o = offsets[layer]
                for k in range(n):
                    x = tape_re[layer, b, k]
                    y = tape_im[layer, b, k]
                    c = cos_t[o + k]
                    s = sin_t[o + k]
                    wx = x * c - y * s
                    wy = x * s + y * c
                    a = cr[b, k]
                    d = ci[b, k]
                    grad[b, o + k] = d * wx - a * wy
                    cr[b, k] = a * c + d * s
                    ci[b, k] = d * c - a * s
            elif op == 1 or op == 2:
                j = op - 1
                while j + 1 < n:
                    crj = cr[b, j]
                    cij = ci[b, j]
                    crk = cr[b, j + 1]
                    cik = ci[b, j + 1]
                    cr[b, j] = (crj + cik) * INV_SQRT2
                    ci[b, j] = (cij - crk) * INV_SQRT2
                    cr[b, j + 1] = (crk + cij) * INV_SQRT2
                    ci[b, j + 1] = (cik - crj) * INV_SQRT2
                    j += 2
            else:
                for k in range(n):
                    x = tape_re[layer, b, k]
                    y = tape_im[layer, b, k]
                    r = sqrt(x * x + y * y)
                    if r < eps:
                        raise DegenerateAmplitudeError(int(k), float(r), sample=int(b))
                    t = (y * cr[b, k] - x * ci[b, k]) / (r * r * r)
                    cr[b, k] = y * t
                    ci[b, k] = -x * t
    return grad_arr, np.asarray(cr), np.asarray(ci)
