"""Phasor states, gate primitives, circuit specs and the forward pass.

A state of ``N`` threads is held as two float64 arrays (real and imaginary
parts). Gates are written directly in real arithmetic with a fixed operation
order; the batched kernels in :mod:`vpcircuit.kernels` use the same order, so
single-state and batched evaluation agree bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateAmplitudeError, DimensionError, InvalidInputError

EPS_PULLBACK = 1e-12
TORUS_TOL = 1e-12
INV_SQRT2 = 1.0 / math.sqrt(2.0)

SHIFT = "shift"
MIX_EVEN = "mix-even"
MIX_ODD = "mix-odd"
NORMALIZE = "normalize"
LAYER_KINDS = (SHIFT, MIX_EVEN, MIX_ODD, NORMALIZE)

# opcodes consumed by the batched kernels
OPCODES = {SHIFT: 0, MIX_EVEN: 1, MIX_ODD: 2, NORMALIZE: 3}

BUILTIN_CIRCUITS = ("single-stack", "deep-circuit", "deep-stack")
DEFAULT_DEPTH = 4


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PhasorState:
    """Complex amplitudes of ``N`` threads, stored as real and imaginary parts."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = _frozen(self.re).reshape(-1)
        im = _frozen(self.im).reshape(-1)
        if re.shape != im.shape:
            raise DimensionError(f"re/im length mismatch: {re.size} vs {im.size}")
        if re.size < 1:
            raise DimensionError("a phasor state needs at least one thread")
        if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
            raise InvalidInputError("phasor amplitudes must be finite")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_complex(cls, amps) -> PhasorState:
        amps = np.asarray(amps, dtype=np.complex128)
        return cls(amps.real, amps.imag)

    @property
    def n(self) -> int:
        return self.re.size

    @property
    def amps(self) -> np.ndarray:
        return self.re + 1j * self.im

    def moduli(self) -> np.ndarray:
        return np.sqrt(self.re * self.re + self.im * self.im)

    def phases(self) -> np.ndarray:
        return np.arctan2(self.im, self.re)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.re * self.re + self.im * self.im)))

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, PhasorState):
            return NotImplemented
        return np.array_equal(self.re, other.re) and np.array_equal(self.im, other.im)

    def __hash__(self):
        return hash((self.re.tobytes(), self.im.tobytes()))

    def __repr__(self):
        return f"PhasorState({np.array2string(self.amps, precision=5)})"


def state_from_phases(phases: Iterable[float]) -> PhasorState:
    phases = np.asarray(list(phases) if not isinstance(phases, np.ndarray) else phases, dtype=np.float64)
    if phases.ndim != 1 or phases.size < 1:
        raise DimensionError("phases must be a non-empty vector")
    if not np.all(np.isfinite(phases)):
        raise InvalidInputError("phases must be finite")
    return PhasorState(np.cos(phases), np.sin(phases))


def is_on_torus(state: PhasorState, tol: float = TORUS_TOL) -> bool:
    return bool(np.all(np.abs(state.moduli() - 1.0) <= tol))


def _check_thetas(state: PhasorState, thetas) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=np.float64).reshape(-1)
    if thetas.size != state.n:
        raise DimensionError(f"expected {state.n} shift angles, got {thetas.size}")
    return thetas


def _rotate(x, y, c, s):
    return x * c - y * s, x * s + y * c


def apply_shift(state: PhasorState, thetas: Sequence[float]) -> PhasorState:
    """Rotate thread ``k`` by ``exp(i thetas[k])``."""
    thetas = _check_thetas(state, thetas)
    re, im = _rotate(state.re, state.im, np.cos(thetas), np.sin(thetas))
    return PhasorState(re, im)


def _mix_inplace(re: np.ndarray, im: np.ndarray, j: int, k: int) -> None:
    xj, yj, xk, yk = re[..., j].copy(), im[..., j].copy(), re[..., k].copy(), im[..., k].copy()
    re[..., j] = (xj - yk) * INV_SQRT2
    im[..., j] = (yj + xk) * INV_SQRT2
    re[..., k] = (xk - yj) * INV_SQRT2
    im[..., k] = (yk + xj) * INV_SQRT2


def apply_mix_pair(state: PhasorState, j: int, k: int) -> PhasorState:
    """Beam-splitter ``(1/sqrt2)[[1, i], [i, 1]]`` on threads ``j`` and ``k``."""
    n = state.n
    if j == k:
        raise DimensionError("mix pair needs two distinct threads")
    for idx in (j, k):
        if not 0 <= idx < n:
            raise DimensionError(f"thread index {idx} out of range for N={n}")
    re, im = state.re.copy(), state.im.copy()
    _mix_inplace(re, im, j, k)
    return PhasorState(re, im)


def mix_pairs(n: int, parity: str) -> list[tuple[int, int]]:
    start = _parity_offset(parity)
    return [(j, j + 1) for j in range(start, n - 1, 2)]


def _parity_offset(parity: str) -> int:
    if parity in ("even", MIX_EVEN):
        return 0
    if parity in ("odd", MIX_ODD):
        return 1
    raise InvalidInputError(f"unknown mix parity {parity!r}")


def apply_mix_layer(state: PhasorState, parity: str) -> PhasorState:
    """Mix every disjoint adjacent pair starting at offset 0 (even) or 1 (odd).

    A trailing thread without a partner passes through unchanged.
    """
    re, im = state.re.copy(), state.im.copy()
    for j, k in mix_pairs(state.n, parity):
        _mix_inplace(re, im, j, k)
    return PhasorState(re, im)


def apply_normalize(state: PhasorState, eps: float = EPS_PULLBACK) -> PhasorState:
    """Pull every thread back to unit modulus, keeping its phase."""
    r = np.sqrt(state.re * state.re + state.im * state.im)
    bad = np.flatnonzero(r < eps)
    if bad.size:
        raise DegenerateAmplitudeError(int(bad[0]), float(r[bad[0]]))
    return PhasorState(state.re / r, state.im / r)


@dataclass(frozen=True)
class GateLayer:
    kind: str
    param_offset: int | None = None

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise InvalidInputError(f"unknown layer kind {self.kind!r}")
        if (self.kind == SHIFT) != (self.param_offset is not None):
            raise InvalidInputError("only shift layers carry a parameter offset")


@dataclass(frozen=True)
class CircuitSpec:
    n_threads: int
    layers: tuple[GateLayer, ...] = field(default_factory=tuple)
    name: str = "custom"

    def __post_init__(self):
        if self.n_threads < 1:
            raise DimensionError("a circuit needs at least one thread")
        object.__setattr__(self, "layers", tuple(self.layers))
        expected = 0
        for layer in self.layers:
            if layer.kind == SHIFT:
                if layer.param_offset != expected:
                    raise InvalidInputError(
                        f"shift layer offset {layer.param_offset} should be {expected}"
                    )
                expected += self.n_threads

    @classmethod
    def from_kinds(cls, n_threads: int, kinds: Iterable[str], name: str = "custom") -> CircuitSpec:
        layers = []
        offset = 0
        for kind in kinds:
            if kind == SHIFT:
                layers.append(GateLayer(SHIFT, offset))
                offset += n_threads
            else:
                layers.append(GateLayer(kind))
        return cls(n_threads, tuple(layers), name)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(layer.kind for layer in self.layers)

    @property
    def param_count(self) -> int:
        return param_count(self)

    @property
    def has_normalize(self) -> bool:
        return NORMALIZE in self.kinds

    def to_text(self) -> str:
        return " ".join([f"threads={self.n_threads}", *self.kinds])

    @classmethod
    def from_text(cls, text: str, name: str = "custom") -> CircuitSpec:
        """Parse ``threads=N`` followed by layer tokens, separated by spaces or commas."""
        tokens = text.replace(",", " ").split()
        n = None
        kinds = []
        for tok in tokens:
            if tok.startswith("threads="):
                try:
                    n = int(tok.split("=", 1)[1])
                except ValueError:
                    raise InvalidInputError(f"bad thread count in {tok!r}") from None
            elif tok in LAYER_KINDS:
                kinds.append(tok)
            else:
                raise InvalidInputError(f"unknown circuit token {tok!r}")
        if n is None:
            raise InvalidInputError("circuit text needs a threads=N token")
        return cls.from_kinds(n, kinds, name)

    def opcodes(self) -> tuple[np.ndarray, np.ndarray]:
        ops = np.array([OPCODES[layer.kind] for layer in self.layers], dtype=np.int64)
        offsets = np.array(
            [layer.param_offset if layer.param_offset is not None else -1 for layer in self.layers],
            dtype=np.int64,
        )
        return ops, offsets


def param_count(spec: CircuitSpec) -> int:
    return spec.n_threads * sum(1 for layer in spec.layers if layer.kind == SHIFT)


def single_stack(n_threads: int) -> CircuitSpec:
    """Two shift layers with an even then odd brick of mixers."""
    return CircuitSpec.from_kinds(n_threads, [SHIFT, MIX_EVEN, SHIFT, MIX_ODD], "single-stack")


def deep_circuit(n_threads: int, depth: int = DEFAULT_DEPTH) -> CircuitSpec:
    return CircuitSpec.from_kinds(n_threads, [SHIFT, MIX_EVEN, MIX_ODD] * depth, "deep-circuit")


def deep_stack(n_threads: int, depth: int = DEFAULT_DEPTH) -> CircuitSpec:
    return CircuitSpec.from_kinds(
        n_threads, [SHIFT, MIX_EVEN, MIX_ODD, NORMALIZE] * depth, "deep-stack"
    )


def builtin_circuit(name: str, n_threads: int, depth: int = DEFAULT_DEPTH) -> CircuitSpec:
    if name == "single-stack":
        return single_stack(n_threads)
    if name == "deep-circuit":
        return deep_circuit(n_threads, depth)
    if name == "deep-stack":
        return deep_stack(n_threads, depth)
    raise InvalidInputError(f"unknown builtin circuit {name!r}; choose from {BUILTIN_CIRCUITS}")


def resolve_circuit(source: str, n_threads: int, depth: int = DEFAULT_DEPTH) -> CircuitSpec:
    """Builtin name or explicit layer list (``threads=`` may be omitted)."""
    if source in BUILTIN_CIRCUITS:
        return builtin_circuit(source, n_threads, depth)
    text = source if "threads=" in source else f"threads={n_threads} {source}"
    spec = CircuitSpec.from_text(text)
    if spec.n_threads != n_threads:
        raise DimensionError(f"circuit has {spec.n_threads} threads, data has {n_threads}")
    return spec


def is_deep_stack(spec: CircuitSpec) -> bool:
    """Every block ends in exactly one normalize placed right after its last mix layer."""
    kinds = spec.kinds
    if not kinds or kinds[-1] != NORMALIZE:
        return False
    for i, kind in enumerate(kinds):
        if kind == NORMALIZE and (i == 0 or kinds[i - 1] not in (MIX_EVEN, MIX_ODD)):
            return False
    return True


@dataclass(frozen=True)
class Tape:
    """Pre-layer snapshots of one forward pass, in execution order."""

    entries: tuple[tuple[int, PhasorState], ...]
    output: PhasorState
    kinds: tuple[str, ...] = ()

    def __len__(self):
        return len(self.entries)

    def replay(self, spec: CircuitSpec, params) -> PhasorState:
        if not self.entries:
            return self.output
        out, _ = forward(spec, params, self.entries[0][1])
        return out


def _check_params(spec: CircuitSpec, params) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    if params.size != param_count(spec):
        raise DimensionError(f"circuit needs {param_count(spec)} parameters, got {params.size}")
    return params


def apply_layer(layer: GateLayer, state: PhasorState, params: np.ndarray) -> PhasorState:
    if layer.kind == SHIFT:
        return apply_shift(state, params[layer.param_offset : layer.param_offset + state.n])
    if layer.kind == NORMALIZE:
        return apply_normalize(state)
    return apply_mix_layer(state, layer.kind)


def forward(
    spec: CircuitSpec, params, state: PhasorState, record: bool = False
) -> tuple[PhasorState, Tape | None]:
    params = _check_params(spec, params)
    if state.n != spec.n_threads:
        raise DimensionError(f"circuit has {spec.n_threads} threads, state has {state.n}")
    entries = []
    for i, layer in enumerate(spec.layers):
        if record:
            entries.append((i, state))
        state = apply_layer(layer, state, params)
    return state, (Tape(tuple(entries), state, spec.kinds) if record else None)


@dataclass(frozen=True)
class BatchTape:
    """Forward record for a batch: pre-layer planes of shape (layers, batch, N)."""

    spec: CircuitSpec
    params: np.ndarray
    tape_re: np.ndarray
    tape_im: np.ndarray
    out_re: np.ndarray
    out_im: np.ndarray


def trig_params(params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.ascontiguousarray(np.cos(params)), np.ascontiguousarray(np.sin(params))


def forward_many(spec: CircuitSpec, params, re, im, record: bool = False):
    """Run a batch of states ``(batch, N)`` through the circuit.

    Returns ``(out_re, out_im)``, or a :class:`BatchTape` when ``record`` is set.
    """
    from . import kernels

    params = _check_params(spec, params)
    re = np.asarray(re, dtype=np.float64)
    im = np.asarray(im, dtype=np.float64)
    if re.ndim != 2 or re.shape != im.shape:
        raise DimensionError("batched states must be two (batch, N) arrays of equal shape")
    if re.shape[1] != spec.n_threads:
        raise DimensionError(f"circuit has {spec.n_threads} threads, batch has {re.shape[1]}")
    ops, offsets = spec.opcodes()
    c, s = trig_params(params)
    out_re, out_im, tape_re, tape_im = kernels.forward_batch(
        ops, offsets, c, s, re, im, record, EPS_PULLBACK
    )
    if not record:
        return out_re, out_im
    return BatchTape(spec, params, tape_re, tape_im, out_re, out_im)
