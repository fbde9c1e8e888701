"""Numpy implementation of the batched circuit kernels.

Vectorized over the batch axis and looping over layers. Operation order
matches ``_kernels.pyx`` exactly, so both backends return identical bits.
"""

import numpy as np

from .errors import DegenerateAmplitudeError

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _degenerate(r, eps):
    bad = np.argwhere(r < eps)
    if bad.size:
        b, k = (int(v) for v in bad[0])
        raise DegenerateAmplitudeError(k, float(r[b, k]), sample=b)


def forward_batch(ops, offsets, cos_t, sin_t, re, im, record, eps):
    re = np.array(re, dtype=np.float64, order="C")
    im = np.array(im, dtype=np.float64, order="C")
    n_layers = len(ops)
    batch, n = re.shape
    tape_re = np.empty((n_layers, batch, n)) if record else None
    tape_im = np.empty((n_layers, batch, n)) if record else None
    for layer in range(n_layers):
        if record:
            tape_re[layer] = re
            tape_im[layer] = im
        op = ops[layer]
        if op == 0:
            o = offsets[layer]
            c = cos_t[o : o + n]
            s = sin_t[o : o + n]
            re, im = re * c - im * s, re * s + im * c
        elif op == 1 or op == 2:
            start = op - 1
            xj = re[:, start : n - 1 : 2]
            yj = im[:, start : n - 1 : 2]
            xk = re[:, start + 1 : n : 2]
            yk = im[:, start + 1 : n : 2]
            nxj = (xj - yk) * INV_SQRT2
            nyj = (yj + xk) * INV_SQRT2
            nxk = (xk - yj) * INV_SQRT2
            nyk = (yk + xj) * INV_SQRT2
            re[:, start : n - 1 : 2] = nxj
            im[:, start : n - 1 : 2] = nyj
            re[:, start + 1 : n : 2] = nxk
            im[:, start + 1 : n : 2] = nyk
        else:
            r = np.sqrt(re * re + im * im)
            _degenerate(r, eps)
            re = re / r
            im = im / r
    return re, im, tape_re, tape_im


def backward_batch(ops, offsets, cos_t, sin_t, tape_re, tape_im, cot_re, cot_im, n_params, eps):
    n_layers, batch, n = tape_re.shape
    grad = np.zeros((batch, n_params))
    cr = np.array(cot_re, dtype=np.float64, order="C")
    ci = np.array(cot_im, dtype=np.float64, order="C")
    for layer in range(n_layers - 1, -1, -1):
        op = ops[layer]
        if op == 0:
            x = tape_re[layer]
            y = tape_im[layer]
            o = offsets[layer]
            c = cos_t[o : o + n]
            s = sin_t[o : o + n]
            wx = x * c - y * s
            wy = x * s + y * c
            grad[:, o : o + n] = ci * wx - cr * wy
            cr, ci = cr * c + ci * s, ci * c - cr * s
        elif op == 1 or op == 2:
            start = op - 1
            crj = cr[:, start : n - 1 : 2]
            cij = ci[:, start : n - 1 : 2]
            crk = cr[:, start + 1 : n : 2]
            cik = ci[:, start + 1 : n : 2]
            ncrj = (crj + cik) * INV_SQRT2
            ncij = (cij - crk) * INV_SQRT2
            ncrk = (crk + cij) * INV_SQRT2
            ncik = (cik - crj) * INV_SQRT2
            cr[:, start : n - 1 : 2] = ncrj
            ci[:, start : n - 1 : 2] = ncij
            cr[:, start + 1 : n : 2] = ncrk
            ci[:, start + 1 : n : 2] = ncik
        else:
            x = tape_re[layer]
            y = tape_im[layer]
            r = np.sqrt(x * x + y * y)
            _degenerate(r, eps)
            t = (y * cr - x * ci) / (r * r * r)
            cr, ci = y * t, -x * t
    return grad, cr, ci
