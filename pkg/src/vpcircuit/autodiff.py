"""Reverse-mode gradients with respect to shift angles.

Every complex thread is treated as two real coordinates. A cotangent holds
``dL/dRe z`` and ``dL/dIm z`` per thread, so non-holomorphic steps (pull-back,
``arg``, ``|.|``) are handled by ordinary real Jacobians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .core import (
    EPS_PULLBACK,
    INV_SQRT2,
    MIX_EVEN,
    MIX_ODD,
    NORMALIZE,
    SHIFT,
    BatchTape,
    CircuitSpec,
    PhasorState,
    Tape,
    _check_params,
    _check_thetas,
    _parity_offset,
    forward,
    mix_pairs,
    trig_params,
)
from .errors import DegenerateAmplitudeError, DimensionError, InvalidInputError

FD_STEP = 1e-5
REL_ERR_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class Cotangent:
    d_re: np.ndarray
    d_im: np.ndarray

    def __post_init__(self):
        d_re = np.array(self.d_re, dtype=np.float64).reshape(-1)
        d_im = np.array(self.d_im, dtype=np.float64).reshape(-1)
        if d_re.shape != d_im.shape:
            raise DimensionError("cotangent re/im length mismatch")
        object.__setattr__(self, "d_re", d_re)
        object.__setattr__(self, "d_im", d_im)

    @classmethod
    def zeros(cls, n: int) -> Cotangent:
        return cls(np.zeros(n), np.zeros(n))

    @property
    def n(self) -> int:
        return self.d_re.size

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.d_re * self.d_re + self.d_im * self.d_im)))


def _check_cot(cot: Cotangent, n: int) -> None:
    if cot.n != n:
        raise DimensionError(f"cotangent has {cot.n} threads, expected {n}")


def vjp_shift(cot: Cotangent, pre_state: PhasorState, thetas) -> tuple[Cotangent, np.ndarray]:
    """Pull a cotangent back through ``z -> z exp(i theta)``.

    The angle gradient is ``Re(conj(c) * i * w)`` with ``w`` the rotated
    amplitude; the input cotangent is ``c`` rotated by ``exp(-i theta)``.
    """
    thetas = _check_thetas(pre_state, thetas)
    _check_cot(cot, pre_state.n)
    c, s = np.cos(thetas), np.sin(thetas)
    x, y = pre_state.re, pre_state.im
    wx = x * c - y * s
    wy = x * s + y * c
    cr, ci = cot.d_re, cot.d_im
    grad = ci * wx - cr * wy
    return Cotangent(cr * c + ci * s, ci * c - cr * s), grad


def vjp_mix_layer(cot: Cotangent, parity: str) -> Cotangent:
    """Apply the adjoint beam splitter ``(1/sqrt2)[[1, -i], [-i, 1]]`` pairwise."""
    _parity_offset(parity)
    cr, ci = cot.d_re.copy(), cot.d_im.copy()
    for j, k in mix_pairs(cot.n, parity):
        crj, cij, crk, cik = cr[j], ci[j], cr[k], ci[k]
        cr[j] = (crj + cik) * INV_SQRT2
        ci[j] = (cij - crk) * INV_SQRT2
        cr[k] = (crk + cij) * INV_SQRT2
        ci[k] = (cik - crj) * INV_SQRT2
    return Cotangent(cr, ci)


def vjp_normalize(cot: Cotangent, pre_state: PhasorState) -> Cotangent:
    """Transpose Jacobian of ``(x, y) -> (x, y)/r``: ``(1/r^3)[[y^2, -xy], [-xy, x^2]]``.

    Only the tangential part of the cotangent survives, scaled by ``1/r``.
    """
    _check_cot(cot, pre_state.n)
    x, y = pre_state.re, pre_state.im
    r = np.sqrt(x * x + y * y)
    bad = np.flatnonzero(r < EPS_PULLBACK)
    if bad.size:
        raise DegenerateAmplitudeError(int(bad[0]), float(r[bad[0]]))
    t = (y * cot.d_re - x * cot.d_im) / (r * r * r)
    return Cotangent(y * t, -x * t)


def backward(tape: Tape, spec: CircuitSpec, params, out_cot: Cotangent) -> np.ndarray:
    """Gradient of the loss with respect to every shift angle, in parameter order."""
    params = _check_params(spec, params)
    if len(tape.entries) != len(spec.layers):
        raise DimensionError(
            f"tape has {len(tape.entries)} entries but circuit has {len(spec.layers)} layers"
        )
    if tape.kinds and tape.kinds != spec.kinds:
        raise DimensionError("tape was recorded against a different circuit")
    _check_cot(out_cot, spec.n_threads)
    grad = np.zeros(params.size)
    cot = out_cot
    for (index, pre), layer in zip(reversed(tape.entries), reversed(spec.layers)):
        if layer.kind == SHIFT:
            o = layer.param_offset
            cot, g = vjp_shift(cot, pre, params[o : o + spec.n_threads])
            grad[o : o + spec.n_threads] = g
        elif layer.kind == NORMALIZE:
            cot = vjp_normalize(cot, pre)
        else:
            cot = vjp_mix_layer(cot, layer.kind)
    return grad


def backward_many(tape: BatchTape, cot_re, cot_im) -> np.ndarray:
    """Per-sample angle gradients, shape ``(batch, param_count)``."""
    spec = tape.spec
    if tape.tape_re is None:
        raise InvalidInputError("batch tape was not recorded")
    cot_re = np.asarray(cot_re, dtype=np.float64)
    cot_im = np.asarray(cot_im, dtype=np.float64)
    if cot_re.shape != tape.out_re.shape or cot_im.shape != tape.out_re.shape:
        raise DimensionError("cotangent shape does not match batch output")
    ops, offsets = spec.opcodes()
    c, s = trig_params(tape.params)
    grad, _, _ = kernels.backward_batch(
        ops, offsets, c, s, tape.tape_re, tape.tape_im, cot_re, cot_im,
        spec.param_count, EPS_PULLBACK,
    )
    return grad


def sum_rows(per_sample: np.ndarray) -> np.ndarray:
    """Sum per-sample gradients in index order."""
    total = np.zeros(per_sample.shape[1])
    for row in per_sample:
        total += row
    return total


LossFn = Callable[[PhasorState], tuple]


@dataclass(frozen=True)
class GradReport:
    analytic: list
    fd: list
    max_rel_err: float

    def to_dict(self) -> dict:
        return {"analytic": list(self.analytic), "fd": list(self.fd), "max_rel_err": self.max_rel_err}


def rel_errors(analytic: np.ndarray, fd: np.ndarray) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), REL_ERR_FLOOR)
    return np.abs(analytic - fd) / denom


def grad_check(spec: CircuitSpec, params, state: PhasorState, loss_fn: LossFn,
               fd_step: float = FD_STEP) -> GradReport:
    """Compare the analytic gradient with central differences.

    ``loss_fn`` maps the circuit output to ``(loss, Cotangent)``.
    """
    params = _check_params(spec, params)
    out, tape = forward(spec, params, state, record=True)
    _, cot = loss_fn(out)
    analytic = backward(tape, spec, params, cot)
    fd = np.zeros(params.size)
    for i in range(params.size):
        up = params.copy()
        up[i] += fd_step
        down = params.copy()
        down[i] -= fd_step
        l_up = loss_fn(forward(spec, up, state)[0])[0]
        l_down = loss_fn(forward(spec, down, state)[0])[0]
        fd[i] = (l_up - l_down) / (2.0 * fd_step)
    err = float(np.max(rel_errors(analytic, fd))) if params.size else 0.0
    if math.isnan(err):
        err = math.inf
    return GradReport([float(v) for v in analytic], [float(v) for v in fd], err)
