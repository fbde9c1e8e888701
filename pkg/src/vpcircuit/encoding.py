"""Lift real channel snapshots onto the torus.

Each snapshot is z-scored with the population standard deviation, squashed
to phases ``pi * tanh(x)`` strictly inside ``(-pi, pi)``, and exponentiated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PhasorState, state_from_phases
from .errors import ConstantSnapshotError, DimensionError, InvalidInputError

MIN_STD = 1e-12


@dataclass(frozen=True, eq=False)
class Snapshot:
    values: np.ndarray
    label: int

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("snapshot values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def zscore(values) -> np.ndarray:
    """Zero mean, unit population variance along the last axis."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] < 2:
        raise DimensionError("z-scoring needs at least two channels")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("snapshot values must be finite")
    mean = np.mean(values, axis=-1, keepdims=True)
    centered = values - mean
    std = np.sqrt(np.mean(centered * centered, axis=-1, keepdims=True))
    if np.any(std < MIN_STD):
        rows = np.flatnonzero(std.reshape(-1) < MIN_STD)
        where = "" if values.ndim == 1 else f" (row {int(rows[0])})"
        raise ConstantSnapshotError(f"snapshot has zero variance{where}")
    return centered / std


def phase_encode(normed) -> np.ndarray:
    normed = np.asarray(normed, dtype=np.float64)
    if not np.all(np.isfinite(normed)):
        raise InvalidInputError("normalized values must be finite")
    return np.pi * np.tanh(normed)


def encode(snapshot: Snapshot | np.ndarray) -> PhasorState:
    values = snapshot.values if isinstance(snapshot, Snapshot) else snapshot
    return state_from_phases(phase_encode(zscore(values)))


def encode_phases(values) -> np.ndarray:
    """Encoded phases for a ``(samples, channels)`` array."""
    return phase_encode(zscore(values))


def encode_many(values) -> tuple[np.ndarray, np.ndarray]:
    """Encode a ``(samples, channels)`` array; returns real and imaginary planes."""
    phases = encode_phases(values)
    return np.cos(phases), np.sin(phases)
