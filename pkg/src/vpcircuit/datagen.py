"""Synthetic multichannel BCI snapshots with class-conditioned spatial templates.

Four templates over ``N`` channels with amplitude ``a``:

0. calm: all zeros
1. left: first ``N // 2`` channels at ``+a``, the rest at ``-a``
2. right: class 1 reversed across channels
3. flow: linear ramp from ``-2a`` to ``+2a``

A 4-class dataset uses all four. A 2-class dataset uses templates 1 and 2
(left vs right), relabelled 0 and 1. Every snapshot adds i.i.d. Gaussian
noise drawn from a SplitMix64 stream keyed by ``(seed, label, sample index)``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .encoding import Snapshot
from .errors import ConfigError, InvalidInputError, InvalidSplitError
from .prng import SplitMix64

TEMPLATE_NAMES = ("calm", "left_mi", "right_mi", "flow")
TASK_TEMPLATES = {4: (0, 1, 2, 3), 2: (1, 2)}


@dataclass(frozen=True)
class GenSpec:
    n_channels: int = 32
    n_classes: int = 4
    samples_per_class: int = 200
    noise_sigma: float = 0.5
    amplitude: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.n_channels < 2:
            raise ConfigError("n_channels must be at least 2")
        if self.n_classes not in TASK_TEMPLATES:
            raise ConfigError("n_classes must be 2 or 4")
        if self.samples_per_class < 1:
            raise ConfigError("samples_per_class must be positive")
        if not self.noise_sigma >= 0:
            raise ConfigError("noise_sigma must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def templates(self) -> tuple[int, ...]:
        return TASK_TEMPLATES[self.n_classes]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.60
    val_frac: float = 0.15
    test_frac: float = 0.25
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(not f > 0 for f in fracs):
            raise InvalidSplitError("every split fraction must be positive")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise InvalidSplitError(f"split fractions sum to {sum(fracs)}, not 1")


@dataclass(frozen=True, eq=False)
class Dataset:
    values: np.ndarray  # (samples, channels)
    labels: np.ndarray  # (samples,)
    class_names: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if values.ndim != 2 or values.shape[0] != labels.size:
            raise InvalidInputError("values must be (samples, channels) matching the labels")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __len__(self):
        return self.labels.size

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names) if self.class_names else int(self.labels.max()) + 1

    @property
    def snapshots(self) -> list[Snapshot]:
        return [Snapshot(v, int(y)) for v, y in zip(self.values, self.labels)]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices) -> Dataset:
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.values[idx], self.labels[idx], self.class_names)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(["label"] + [f"ch{k}" for k in range(self.n_channels)]) + "\n")
        for y, row in zip(self.labels, self.values):
            buf.write(str(int(y)) + "," + ",".join(format(float(v), ".17g") for v in row) + "\n")
        return buf.getvalue()

    def hash(self) -> str:
        return hashlib.sha256(self.to_csv().encode("ascii")).hexdigest()


def class_template(cls: int, n_channels: int, amplitude: float) -> np.ndarray:
    if not 0 <= cls < len(TEMPLATE_NAMES):
        raise InvalidInputError(f"template {cls} out of range 0..{len(TEMPLATE_NAMES) - 1}")
    if n_channels < 1:
        raise InvalidInputError("n_channels must be positive")
    half = n_channels // 2
    if cls == 0:
        return np.zeros(n_channels)
    if cls in (1, 2):
        left = np.where(np.arange(n_channels) < half, amplitude, -amplitude).astype(np.float64)
        return left if cls == 1 else left[::-1].copy()
    if n_channels == 1:
        return np.zeros(1)
    return amplitude * (-2.0 + 4.0 * np.arange(n_channels) / (n_channels - 1))


def generate(spec: GenSpec) -> Dataset:
    rows = []
    labels = []
    for label, template_id in enumerate(spec.templates):
        template = class_template(template_id, spec.n_channels, spec.amplitude)
        for i in range(spec.samples_per_class):
            noise = SplitMix64(spec.seed, label, i).normals(spec.n_channels)
            rows.append(template + spec.noise_sigma * np.asarray(noise))
            labels.append(label)
    names = tuple(TEMPLATE_NAMES[t] for t in spec.templates)
    return Dataset(np.array(rows).reshape(-1, spec.n_channels), np.array(labels), names)


def stratified_split(data: Dataset, split: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Shuffle each class with the split seed, then allocate by proportion.

    Per class of size ``n``: ``round(train_frac * n)`` to train,
    ``round(val_frac * n)`` to validation, the remainder to test.
    """
    parts = ([], [], [])
    for cls in range(data.n_classes):
        members = np.flatnonzero(data.labels == cls).tolist()
        n = len(members)
        n_train = int(round(split.train_frac * n))
        n_val = int(round(split.val_frac * n))
        n_test = n - n_train - n_val
        if min(n_train, n_val, n_test) < 1:
            raise InvalidSplitError(
                f"class {cls} with {n} samples leaves an empty split ({n_train}/{n_val}/{n_test})"
            )
        order = SplitMix64(split.seed, cls).shuffle(members)
        parts[0].extend(order[:n_train])
        parts[1].extend(order[n_train : n_train + n_val])
        parts[2].extend(order[n_train + n_val :])
    return tuple(data.subset(p) for p in parts)


def write_dataset(data: Dataset, csv_path, spec: GenSpec | None = None) -> str:
    """Write CSV plus a JSON sidecar; returns the dataset hash."""
    csv_path = Path(csv_path)
    try:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        text = data.to_csv()
        csv_path.write_text(text, encoding="ascii")
        sidecar = {
            "class_names": list(data.class_names),
            "dataset_hash": data.hash(),
            "genspec": spec.to_dict() if spec is not None else None,
            "n_samples": len(data),
        }
        csv_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write dataset to {csv_path}: {exc}") from exc
    return data.hash()


def read_dataset(csv_path) -> Dataset:
    """Read a dataset CSV (``label,ch0,...``); class names come from a sidecar if present."""
    csv_path = Path(csv_path)
    try:
        text = csv_path.read_text(encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot read dataset {csv_path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[0] != "label" or any(
        h != f"ch{k}" for k, h in enumerate(header[1:])
    ):
        raise InvalidInputError(f"{csv_path}: header must be label,ch0,ch1,...")
    labels, rows = [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise InvalidInputError(f"{csv_path}:{lineno}: expected {len(header)} fields")
        try:
            labels.append(int(rec[0]))
            rows.append([float(v) for v in rec[1:]])
        except ValueError:
            raise InvalidInputError(f"{csv_path}:{lineno}: malformed number") from None
    if not rows:
        raise InvalidInputError(f"{csv_path}: no samples")
    labels = np.array(labels)
    if labels.min() < 0:
        raise InvalidInputError(f"{csv_path}: labels must be non-negative")
    names = ()
    sidecar = csv_path.with_suffix(".json")
    if sidecar.exists():
        try:
            names = tuple(json.loads(sidecar.read_text()).get("class_names") or ())
        except (OSError, ValueError):
            names = ()
    if not names:
        names = tuple(f"class{k}" for k in range(int(labels.max()) + 1))
    return Dataset(np.array(rows), labels, names)
