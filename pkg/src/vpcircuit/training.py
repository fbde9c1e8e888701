"""Optimizers, training loops, evaluation and the dense MLP baseline."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import readout
from .autodiff import backward_many, sum_rows
from .core import CircuitSpec, forward_many
from .datagen import Dataset
from .encoding import encode_phases
from .errors import ConfigError, DegenerateAmplitudeError, DimensionError, DivergenceError
from .prng import SplitMix64
from .readout import ConfusionMatrix

log = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "derivative_free")
LOSSES = ("mse", "cross_entropy")
INIT_SCALE = 0.1
# stream ids keep initialization draws independent of data draws with the same seed
INIT_STREAM = 0x1717
MLP_STREAM = 0x4D4C50
DF_MAX_PARAMS = 256
# the 2372-parameter baseline overfits at the circuit's 0.05 within 100 epochs
MLP_LEARNING_RATE = 0.01


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.05
    batch: str | int = "full"
    optimizer: str = "adam"
    seed: int = 0
    loss: str = "cross_entropy"
    kink_guard: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    max_evals: int = 5000
    rho_begin: float = 0.5
    rho_end: float = 1e-6

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if not self.learning_rate >= 0 or not math.isfinite(self.learning_rate):
            raise ConfigError("learning_rate must be a non-negative finite number")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}")
        if self.batch != "full" and (not isinstance(self.batch, int) or self.batch < 1):
            raise ConfigError("batch must be 'full' or a positive integer")
        if self.max_evals < 1:
            raise ConfigError("max_evals must be positive")

    @property
    def task(self) -> str:
        return "binary" if self.loss == "mse" else "multiclass"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class TrainReport:
    optimizer: str
    task: str
    param_count: int
    params: list
    train_loss: list
    val_loss: list
    final_train_loss: float
    final_val_loss: float
    val_accuracy: float
    test_accuracy: float | None = None
    confusion: list | None = None
    confusion_split: str = "val"
    model: str = ""
    epochs_run: int = 0
    n_evals: int = 0
    budget_exhausted: bool = False
    degenerate_count: int = 0
    wall_time: float = field(default=0.0, compare=False)

    @property
    def initial_train_loss(self) -> float:
        return self.train_loss[0] if self.train_loss else self.final_train_loss

    def to_dict(self) -> dict:
        """Serializable metrics; wall time is left out so reruns compare byte-for-byte."""
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "wall_time"}
        d["initial_train_loss"] = self.initial_train_loss
        return d


@dataclass(frozen=True, eq=False)
class EncodedData:
    """A dataset lifted onto the torus, ready for batched circuit evaluation."""

    phases: np.ndarray
    re: np.ndarray
    im: np.ndarray
    labels: np.ndarray
    n_classes: int
    dataset_hash: str = ""

    @classmethod
    def from_dataset(cls, data: Dataset) -> EncodedData:
        phases = encode_phases(data.values)
        return cls(phases, np.cos(phases), np.sin(phases), data.labels.copy(), data.n_classes,
                   data.hash())

    def __len__(self):
        return self.labels.size

    def rows(self, sl) -> EncodedData:
        return EncodedData(self.phases[sl], self.re[sl], self.im[sl], self.labels[sl],
                           self.n_classes, self.dataset_hash)


class Adam:
    """Adam with bias correction; state is updated by :meth:`step`."""

    def __init__(self, n_params, lr=0.05, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def init_params(n: int, seed: int, scale: float = INIT_SCALE) -> np.ndarray:
    return np.array(SplitMix64(seed, INIT_STREAM).uniforms(n, -scale, scale))


def _check_task(spec: CircuitSpec, data: EncodedData, task: str) -> None:
    if data.re.shape[1] != spec.n_threads:
        raise DimensionError(f"circuit has {spec.n_threads} threads, data has {data.re.shape[1]}")
    if task == "binary" and data.n_classes != 2:
        raise ConfigError("binary task needs a 2-class dataset")
    if task == "multiclass" and data.n_classes > spec.n_threads:
        raise ConfigError("multiclass readout needs at least K threads")


def _objective(spec, params, data: EncodedData, task, kink_guard=True, with_grad=True):
    if with_grad:
        tape = forward_many(spec, params, data.re, data.im, record=True)
        out_re, out_im = tape.out_re, tape.out_im
    else:
        out_re, out_im = forward_many(spec, params, data.re, data.im)
    if task == "binary":
        obj = readout.binary_objective(out_re, out_im, data.labels, with_grad)
    else:
        obj = readout.multiclass_objective(out_re, out_im, data.labels, data.n_classes,
                                           kink_guard, with_grad)
    if not with_grad:
        return obj.loss, None
    return obj.loss, sum_rows(backward_many(tape, obj.cot_re, obj.cot_im))


def loss_and_grad(spec, params, data: EncodedData, task, kink_guard=True):
    """Mean loss and its gradient over ``data``; per-sample terms summed in index order."""
    return _objective(spec, np.asarray(params, dtype=np.float64), data, task, kink_guard)


def loss_value(spec, params, data: EncodedData, task) -> float:
    return _objective(spec, np.asarray(params, dtype=np.float64), data, task, with_grad=False)[0]


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    confusion: ConfusionMatrix
    loss: float
    n_degenerate: int = 0

    def __iter__(self):
        return iter((self.accuracy, self.confusion, self.loss))


def evaluate(spec: CircuitSpec, params, data: EncodedData, task: str) -> Evaluation:
    """Accuracy, confusion matrix and mean loss.

    Samples whose readout thread is degenerate are counted as errors (predicted
    as a class other than their label) and excluded from the mean loss.
    """
    params = np.asarray(params, dtype=np.float64)
    if params.size != spec.param_count:
        raise DimensionError(f"circuit needs {spec.param_count} parameters, got {params.size}")
    _check_task(spec, data, task)
    out_re, out_im = forward_many(spec, params, data.re, data.im)
    k = 1 if task == "binary" else data.n_classes
    _, degenerate = readout.readout_phases(out_re, out_im, k)
    ok = ~degenerate
    labels = data.labels
    preds = np.empty(labels.size, dtype=np.int64)
    loss = float("nan")
    if np.any(ok):
        if task == "binary":
            obj = readout.binary_objective(out_re[ok], out_im[ok], labels[ok], with_grad=False)
            preds[ok] = readout.predict_binary(obj.scores)
        else:
            obj = readout.multiclass_objective(out_re[ok], out_im[ok], labels[ok], data.n_classes,
                                               with_grad=False)
            preds[ok] = readout.predict(obj.scores)
        loss = obj.loss
    preds[degenerate] = (labels[degenerate] + 1) % data.n_classes
    cm = readout.confusion(preds, labels, data.n_classes)
    return Evaluation(readout.accuracy(cm), cm, loss, int(degenerate.sum()))


def _batches(n: int, batch):
    if batch == "full" or batch >= n:
        return [slice(0, n)]
    return [slice(i, min(i + batch, n)) for i in range(0, n, batch)]


def _finish(report_kwargs, spec_or_count, params, train, val, test, eval_fn, started):
    val_eval = eval_fn(params, val)
    final_train = eval_fn(params, train).loss
    report = TrainReport(
        params=[float(p) for p in params],
        final_train_loss=float(final_train),
        final_val_loss=float(val_eval.loss),
        val_accuracy=val_eval.accuracy,
        confusion=val_eval.confusion.tolist(),
        degenerate_count=val_eval.n_degenerate,
        **report_kwargs,
    )
    if test is not None:
        test_eval = eval_fn(params, test)
        report.test_accuracy = test_eval.accuracy
        report.confusion = test_eval.confusion.tolist()
        report.confusion_split = "test"
        report.degenerate_count += test_eval.n_degenerate
    report.wall_time = time.perf_counter() - started
    return report


def adam_fit(spec: CircuitSpec, config: TrainConfig, train: EncodedData, val: EncodedData,
             test: EncodedData | None = None) -> TrainReport:
    """Full-batch (or fixed-order mini-batch) Adam on the shift angles.

    ``train_loss[e]`` is the full training loss at the start of epoch ``e``,
    so ``train_loss[0]`` is the loss at initialization.
    """
    started = time.perf_counter()
    task = config.task
    _check_task(spec, train, task)
    params = init_params(spec.param_count, config.seed)
    opt = Adam(params.size, config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    train_curve, val_curve = [], []
    chunks = _batches(len(train), config.batch)
    for epoch in range(1, config.epochs + 1):
        if len(chunks) == 1:
            loss, grad = loss_and_grad(spec, params, train, task, config.kink_guard)
        else:
            loss = loss_value(spec, params, train, task)
        if not math.isfinite(loss):
            raise DivergenceError(epoch, loss)
        train_curve.append(float(loss))
        val_curve.append(float(loss_value(spec, params, val, task)))
        if len(chunks) == 1:
            params = opt.step(params, grad)
        else:
            for sl in chunks:
                _, grad = loss_and_grad(spec, params, train.rows(sl), task, config.kink_guard)
                params = opt.step(params, grad)
        if not np.all(np.isfinite(params)):
            raise DivergenceError(epoch, float("nan"))
    return _finish(
        dict(optimizer="adam", task=task, param_count=spec.param_count, train_loss=train_curve,
             val_loss=val_curve, model=spec.name, epochs_run=config.epochs, n_evals=opt.t),
        spec, params, train, val, test,
        lambda p, d: evaluate(spec, p, d, task), started,
    )


def cobyla_minimize(fun, x0, rho_begin=0.5, rho_end=1e-6, max_evals=5000):
    """Unconstrained COBYLA; returns ``(x_best, budget_exhausted)``."""
    result = minimize(fun, np.asarray(x0, dtype=np.float64), method="COBYLA",
                      options={"rhobeg": rho_begin, "tol": rho_end, "maxiter": max_evals})
    return np.atleast_1d(result.x), bool(result.status == 2 or result.nfev >= max_evals)


def derivative_free_fit(spec: CircuitSpec, config: TrainConfig, train: EncodedData,
                        val: EncodedData, test: EncodedData | None = None) -> TrainReport:
    """Minimize the training loss with COBYLA, without gradients.

    Stops when the trust-region radius falls below ``rho_end`` or after
    ``max_evals`` loss evaluations (then ``budget_exhausted`` is set). Loss
    curves hold the best-so-far training loss and the matching validation
    loss, sampled every ``max_evals // epochs`` evaluations.
    """
    started = time.perf_counter()
    task = config.task
    _check_task(spec, train, task)
    n = spec.param_count
    if n > DF_MAX_PARAMS:
        raise ConfigError(f"derivative-free fitting is limited to {DF_MAX_PARAMS} parameters, got {n}")
    params = init_params(n, config.seed)
    stride = max(1, config.max_evals // config.epochs)
    best = {"loss": math.inf, "params": params.copy()}
    train_curve, val_curve = [], []
    evals = 0

    def fun(theta):
        nonlocal evals
        evals += 1
        loss = loss_value(spec, theta, train, task)
        if not math.isfinite(loss):
            raise DivergenceError(evals, loss)
        if loss < best["loss"]:
            best["loss"] = loss
            best["params"] = np.array(theta, dtype=np.float64)
        if evals % stride == 0 and len(train_curve) < config.epochs:
            train_curve.append(float(best["loss"]))
            val_curve.append(float(loss_value(spec, best["params"], val, task)))
        return loss

    exhausted = False
    if n == 0:
        fun(params)
    else:
        _, exhausted = cobyla_minimize(fun, params, config.rho_begin, config.rho_end,
                                       config.max_evals)
    if not train_curve:
        train_curve.append(float(best["loss"]))
        val_curve.append(float(loss_value(spec, best["params"], val, task)))
    return _finish(
        dict(optimizer="derivative_free", task=task, param_count=n, train_loss=train_curve,
             val_loss=val_curve, model=spec.name, epochs_run=len(train_curve), n_evals=evals,
             budget_exhausted=exhausted),
        spec, best["params"], train, val, test,
        lambda p, d: evaluate(spec, p, d, task), started,
    )


def fit(spec: CircuitSpec, config: TrainConfig, train, val, test=None) -> TrainReport:
    if config.optimizer == "adam":
        return adam_fit(spec, config, train, val, test)
    return derivative_free_fit(spec, config, train, val, test)


# dense baseline


@dataclass(frozen=True)
class MlpSpec:
    """One tanh hidden layer and a softmax output."""

    input_dim: int
    hidden_dim: int
    output_dim: int

    def __post_init__(self):
        if min(self.input_dim, self.hidden_dim, self.output_dim) < 1:
            raise ConfigError("MLP dimensions must be positive")

    @property
    def param_count(self) -> int:
        i, h, o = self.input_dim, self.hidden_dim, self.output_dim
        return i * h + h + h * o + o

    def unpack(self, params):
        i, h, o = self.input_dim, self.hidden_dim, self.output_dim
        w1 = params[: i * h].reshape(i, h)
        b1 = params[i * h : i * h + h]
        w2 = params[i * h + h : i * h + h + h * o].reshape(h, o)
        b2 = params[i * h + h + h * o :]
        return w1, b1, w2, b2


def mlp_init(mlp: MlpSpec, seed: int) -> np.ndarray:
    rng = SplitMix64(seed, MLP_STREAM)
    i, h, o = mlp.input_dim, mlp.hidden_dim, mlp.output_dim
    b_in, b_hid = 1.0 / math.sqrt(i), 1.0 / math.sqrt(h)
    parts = [
        rng.uniforms(i * h, -b_in, b_in),
        rng.uniforms(h, -b_in, b_in),
        rng.uniforms(h * o, -b_hid, b_hid),
        rng.uniforms(o, -b_hid, b_hid),
    ]
    return np.concatenate([np.asarray(p) for p in parts])


def _mlp_forward(mlp: MlpSpec, params, x):
    w1, b1, w2, b2 = mlp.unpack(params)
    hidden = np.tanh(x @ w1 + b1)
    probs = readout.softmax(hidden @ w2 + b2)
    return hidden, probs


def mlp_loss_and_grad(mlp: MlpSpec, params, data: EncodedData):
    x, y = data.phases, data.labels
    batch = y.size
    w1, b1, w2, b2 = mlp.unpack(params)
    hidden, probs = _mlp_forward(mlp, params, x)
    loss = float(np.mean(-np.log(np.clip(probs[np.arange(batch), y], readout.EPS_LOG, 1.0))))
    d_logits = probs.copy()
    d_logits[np.arange(batch), y] -= 1.0
    d_logits /= batch
    g_w2 = hidden.T @ d_logits
    g_b2 = d_logits.sum(axis=0)
    d_hidden = (d_logits @ w2.T) * (1.0 - hidden * hidden)
    g_w1 = x.T @ d_hidden
    g_b1 = d_hidden.sum(axis=0)
    return loss, np.concatenate([g_w1.ravel(), g_b1, g_w2.ravel(), g_b2])


def mlp_evaluate(mlp: MlpSpec, params, data: EncodedData) -> Evaluation:
    _, probs = _mlp_forward(mlp, np.asarray(params, dtype=np.float64), data.phases)
    y = data.labels
    loss = float(np.mean(-np.log(np.clip(probs[np.arange(y.size), y], readout.EPS_LOG, 1.0))))
    cm = readout.confusion(readout.predict(probs), y, mlp.output_dim)
    return Evaluation(readout.accuracy(cm), cm, loss)


def mlp_fit(mlp: MlpSpec, config: TrainConfig, train: EncodedData, val: EncodedData,
            test: EncodedData | None = None) -> TrainReport:
    """Train the baseline with the same Adam on the encoded phases as features."""
    started = time.perf_counter()
    if train.phases.shape[1] != mlp.input_dim:
        raise DimensionError(f"MLP expects {mlp.input_dim} inputs, data has {train.phases.shape[1]}")
    params = mlp_init(mlp, config.seed)
    opt = Adam(params.size, config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    train_curve, val_curve = [], []
    for epoch in range(1, config.epochs + 1):
        loss, grad = mlp_loss_and_grad(mlp, params, train)
        if not math.isfinite(loss):
            raise DivergenceError(epoch, loss)
        train_curve.append(loss)
        val_curve.append(mlp_evaluate(mlp, params, val).loss)
        params = opt.step(params, grad)
    return _finish(
        dict(optimizer="adam", task="multiclass", param_count=mlp.param_count,
             train_loss=train_curve, val_loss=val_curve, model="mlp", epochs_run=config.epochs,
             n_evals=opt.t),
        mlp, params, train, val, test,
        lambda p, d: mlp_evaluate(mlp, p, d), started,
    )
