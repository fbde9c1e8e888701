"""Readouts, losses, predictions and confusion matrices.

Binary tasks read thread 0: ``P(y=1) = (sin(arg z_0) + 1) / 2``. Multiclass
tasks read threads ``0..K-1`` and feed the phase magnitudes ``|arg z_k|`` to
a softmax.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Cotangent
from .core import EPS_PULLBACK, PhasorState
from .errors import DegenerateAmplitudeError, DimensionError, InvalidInputError

log = logging.getLogger(__name__)

EPS_LOG = 1e-12  # floor on the true-class probability inside the log
KINK_EPS = 1e-6


def _thread_phase(state: PhasorState, k: int) -> float:
    x, y = float(state.re[k]), float(state.im[k])
    r = math.sqrt(x * x + y * y)
    if r < EPS_PULLBACK:
        raise DegenerateAmplitudeError(k, r)
    return math.atan2(y, x)


def binary_prob(state: PhasorState) -> float:
    return (math.sin(_thread_phase(state, 0)) + 1.0) / 2.0


def multiclass_logits(state: PhasorState, k: int) -> np.ndarray:
    if k < 1 or k > state.n:
        raise DimensionError(f"need 1 <= K <= N, got K={k}, N={state.n}")
    return np.array([abs(_thread_phase(state, j)) for j in range(k)])


def softmax(logits) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def mse_loss(p, y):
    return (p - y) ** 2


def mse_grad(p, y):
    return 2.0 * (p - y)


def cross_entropy(probs, y) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= y < probs.shape[-1]:
        raise DimensionError(f"class {y} out of range for K={probs.shape[-1]}")
    return float(-math.log(min(max(probs[y], EPS_LOG), 1.0)))


def cross_entropy_grad(probs, y) -> np.ndarray:
    """Gradient with respect to the logits feeding ``probs``."""
    g = np.array(probs, dtype=np.float64)
    g[y] -= 1.0
    return g


def predict(probs) -> int | np.ndarray:
    """Argmax; ties go to the lowest class index."""
    return np.argmax(np.asarray(probs), axis=-1)


def predict_binary(p) -> int | np.ndarray:
    """Class 1 only when ``p > 0.5``; exactly 0.5 maps to class 0."""
    return (np.asarray(p) > 0.5).astype(np.int64)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns are predictions."""

    counts: np.ndarray

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def to_csv(self) -> str:
        return "".join(",".join(str(int(v)) for v in row) + "\n" for row in self.counts)

    def tolist(self) -> list:
        return self.counts.astype(int).tolist()


def confusion(preds, labels, k: int) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if preds.shape != labels.shape:
        raise DimensionError("predictions and labels differ in length")
    if preds.size == 0:
        raise InvalidInputError("empty evaluation set")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(counts)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise InvalidInputError("empty evaluation set")
    return float(np.trace(cm.counts)) / cm.total


# per-state loss closures for grad_check: state -> (loss, Cotangent)


def _phase_cot(x: float, y: float, dphi: float, k: int, cr, ci) -> None:
    r2 = x * x + y * y
    cr[k] += dphi * (-y) / r2
    ci[k] += dphi * x / r2


def binary_mse_loss(label: int):
    def loss_fn(state: PhasorState):
        phi = _thread_phase(state, 0)
        p = (math.sin(phi) + 1.0) / 2.0
        cr, ci = np.zeros(state.n), np.zeros(state.n)
        _phase_cot(state.re[0], state.im[0], mse_grad(p, label) * math.cos(phi) / 2.0, 0, cr, ci)
        return mse_loss(p, label), Cotangent(cr, ci)

    return loss_fn


def _abs_subgrad(phi, kink_guard: bool):
    sign = np.sign(phi)
    if kink_guard:
        kinked = np.abs(phi) < KINK_EPS
        if np.any(kinked):
            log.debug("readout phase within %g of the |phi| kink; using subgradient 0", KINK_EPS)
            sign = np.where(kinked, 0.0, sign)
    return sign


def multiclass_ce_loss(label: int, k: int, kink_guard: bool = True):
    def loss_fn(state: PhasorState):
        phis = np.array([_thread_phase(state, j) for j in range(k)])
        probs = softmax(np.abs(phis))
        dlogit = cross_entropy_grad(probs, label)
        dphi = dlogit * _abs_subgrad(phis, kink_guard)
        cr, ci = np.zeros(state.n), np.zeros(state.n)
        for j in range(k):
            _phase_cot(state.re[j], state.im[j], dphi[j], j, cr, ci)
        return cross_entropy(probs, label), Cotangent(cr, ci)

    return loss_fn


# batched objectives used by training and evaluation


@dataclass(frozen=True)
class Objective:
    loss: float
    per_sample: np.ndarray
    cot_re: np.ndarray
    cot_im: np.ndarray
    scores: np.ndarray  # P(y=1) for binary, class probabilities for multiclass


def readout_phases(re, im, k: int):
    """Phases of threads ``0..k-1`` and a mask of degenerate samples."""
    x = re[:, :k]
    y = im[:, :k]
    r = np.sqrt(x * x + y * y)
    degenerate = np.any(r < EPS_PULLBACK, axis=1)
    return np.arctan2(y, x), degenerate


def _raise_degenerate(re, im, k):
    r = np.sqrt(re[:, :k] ** 2 + im[:, :k] ** 2)
    b, j = np.argwhere(r < EPS_PULLBACK)[0]
    raise DegenerateAmplitudeError(int(j), float(r[b, j]), sample=int(b))


def binary_objective(re, im, labels, with_grad: bool = True) -> Objective:
    labels = np.asarray(labels, dtype=np.float64)
    phi, degenerate = readout_phases(re, im, 1)
    if np.any(degenerate):
        _raise_degenerate(re, im, 1)
    phi = phi[:, 0]
    p = (np.sin(phi) + 1.0) / 2.0
    per = mse_loss(p, labels)
    batch = labels.size
    cot_re = cot_im = None
    if with_grad:
        dphi = mse_grad(p, labels) * np.cos(phi) / 2.0 / batch
        x, y = re[:, 0], im[:, 0]
        r2 = x * x + y * y
        cot_re = np.zeros_like(re)
        cot_im = np.zeros_like(im)
        cot_re[:, 0] = dphi * (-y) / r2
        cot_im[:, 0] = dphi * x / r2
    return Objective(float(np.mean(per)), per, cot_re, cot_im, p)


def multiclass_objective(re, im, labels, k: int, kink_guard: bool = True,
                         with_grad: bool = True) -> Objective:
    labels = np.asarray(labels, dtype=np.int64)
    phi, degenerate = readout_phases(re, im, k)
    if np.any(degenerate):
        _raise_degenerate(re, im, k)
    probs = softmax(np.abs(phi))
    batch = labels.size
    per = -np.log(np.clip(probs[np.arange(batch), labels], EPS_LOG, 1.0))
    cot_re = cot_im = None
    if with_grad:
        dlogit = probs.copy()
        dlogit[np.arange(batch), labels] -= 1.0
        dphi = dlogit * _abs_subgrad(phi, kink_guard) / batch
        x, y = re[:, :k], im[:, :k]
        r2 = x * x + y * y
        cot_re = np.zeros_like(re)
        cot_im = np.zeros_like(im)
        cot_re[:, :k] = dphi * (-y) / r2
        cot_im[:, :k] = dphi * x / r2
    return Objective(float(np.mean(per)), per, cot_re, cot_im, probs)


def near_nonsmooth(out: PhasorState, k: int, margin: float = 1e-4) -> bool:
    """True if a readout phase sits within ``margin`` of 0 or of the ±pi branch cut.

    ``|arg z|`` has a kink at 0 and ``arg`` jumps at ±pi, so finite differences
    straddling either point disagree with any one-sided analytic gradient.
    """
    phases = np.abs(np.arctan2(out.im[:k], out.re[:k]))
    return bool(np.any(phases < margin) or np.any(phases > math.pi - margin))
