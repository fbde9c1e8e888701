"""End-to-end experiment pipelines and their on-disk reports.

Layout of an experiment directory::

    config.json              resolved configuration, written before any work
    summary.json             per-arm metrics across seeds
    timing.txt               wall-clock seconds per run (the only nondeterministic file)
    <arm>/seed_<s>/report.json
    <arm>/seed_<s>/loss.csv
    <arm>/seed_<s>/confusion.csv
    benchmark.csv, benchmark.txt   (benchmark only)

Every JSON and CSV file is a pure function of the configuration, so reruns
with the same seeds are byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import statistics
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .core import DEFAULT_DEPTH, forward, resolve_circuit, state_from_phases
from .datagen import Dataset, GenSpec, SplitSpec, generate, read_dataset, stratified_split
from .errors import ConfigError, DegenerateAmplitudeError
from .prng import SplitMix64
from .readout import near_nonsmooth
from .training import MLP_LEARNING_RATE, EncodedData, MlpSpec, TrainConfig, TrainReport, fit, mlp_fit

log = logging.getLogger(__name__)

EXPERIMENTS = ("binary", "multiclass", "deep_ablation", "benchmark")
MLP_HIDDEN = 64
GRADCHECK_STREAM = 0x6763


@dataclass(frozen=True)
class RunConfig:
    """Everything an experiment needs, flat so it maps onto flags and config files."""

    experiment: str = "multiclass"
    seed: int = 0
    seeds: int = 1
    channels: int = 32
    classes: int | None = None  # None: 2 for binary, 4 otherwise
    samples_per_class: int = 200
    noise_sigma: float = 0.5
    amplitude: float = 1.5
    train_frac: float = 0.60
    val_frac: float = 0.15
    test_frac: float = 0.25
    circuit: str = "single-stack"
    depth: int = DEFAULT_DEPTH
    epochs: int = 100
    lr: float = 0.05
    mlp_lr: float = MLP_LEARNING_RATE
    mlp_hidden: int = MLP_HIDDEN
    optimizer: str = "adam"
    batch: str = "full"
    kink_guard: bool = True
    max_evals: int = 5000
    data: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.seeds < 1:
            raise ConfigError("seeds must be at least 1")
        if self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if self.classes is None:
            object.__setattr__(self, "classes", 2 if self.experiment == "binary" else 4)
        if self.experiment == "binary" and self.classes != 2:
            raise ConfigError("the binary experiment needs classes = 2")
        if self.experiment != "binary" and self.classes != 4:
            raise ConfigError(f"the {self.experiment} experiment needs classes = 4")
        if self.batch != "full":
            try:
                object.__setattr__(self, "batch", str(int(self.batch)))
            except ValueError:
                raise ConfigError("batch must be 'full' or a positive integer") from None
        # validate the derived pieces now, before any computation starts
        self.gen_spec(self.seed)
        self.split_spec(self.seed)
        self.train_config(self.seed)

    @property
    def task(self) -> str:
        return "binary" if self.experiment == "binary" else "multiclass"

    @property
    def seed_list(self) -> list[int]:
        return [self.seed + i for i in range(self.seeds)]

    def gen_spec(self, seed: int) -> GenSpec:
        return GenSpec(self.channels, self.classes, self.samples_per_class, self.noise_sigma,
                       self.amplitude, seed)

    def split_spec(self, seed: int) -> SplitSpec:
        return SplitSpec(self.train_frac, self.val_frac, self.test_frac, seed)

    def train_config(self, seed: int, optimizer: str | None = None) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.lr,
            batch="full" if self.batch == "full" else int(self.batch),
            optimizer=optimizer or self.optimizer,
            seed=seed,
            loss="mse" if self.task == "binary" else "cross_entropy",
            kink_guard=self.kink_guard,
            max_evals=self.max_evals,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, values: dict) -> RunConfig:
        """Build from string or typed values; unknown keys are a config error."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for raw_key, value in values.items():
            key = raw_key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown configuration key {raw_key!r}")
            kwargs[key] = _coerce(key, known[key].type, value)
        return cls(**kwargs)


def _coerce(key, type_name, value):
    if value is None or not isinstance(value, str):
        return value
    text = value.strip()
    try:
        if type_name == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if type_name.startswith("int"):
            return None if text.lower() == "none" else int(text)
        if type_name == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    if type_name.startswith("str | None") and text.lower() in ("", "none"):
        return None
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def dumps(obj) -> str:
    # repr-based float output round-trips exactly
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def loss_csv(report: TrainReport) -> str:
    rows = ["epoch,train_loss,val_loss"]
    for e, (tr, va) in enumerate(zip(report.train_loss, report.val_loss)):
        rows.append(f"{e},{tr!r},{va!r}")
    return "\n".join(rows) + "\n"


def confusion_csv(report: TrainReport) -> str:
    return "".join(",".join(str(v) for v in row) + "\n" for row in report.confusion)


def load_data(cfg: RunConfig, seed: int) -> Dataset:
    if cfg.data:
        data = read_dataset(cfg.data)
        if data.n_channels != cfg.channels:
            raise ConfigError(f"{cfg.data} has {data.n_channels} channels, config says {cfg.channels}")
        if data.n_classes != cfg.classes:
            raise ConfigError(f"{cfg.data} has {data.n_classes} classes, config says {cfg.classes}")
        return data
    return generate(cfg.gen_spec(seed))


def prepare(cfg: RunConfig, seed: int):
    data = load_data(cfg, seed)
    parts = stratified_split(data, cfg.split_spec(seed))
    train, val, test = (EncodedData.from_dataset(p) for p in parts)
    return data.hash(), train, val, test


def _arms(cfg: RunConfig) -> list[tuple[str, str]]:
    """(arm name, model source) pairs; model source is a circuit source or ``mlp``."""
    if cfg.experiment == "deep_ablation":
        return [("deep-circuit", "deep-circuit"), ("deep-stack", "deep-stack")]
    if cfg.experiment == "benchmark":
        return [("vpc-single-stack", "single-stack"), ("vpc-deep-stack", "deep-stack"),
                ("mlp", "mlp")]
    return [(cfg.circuit if cfg.circuit in ("single-stack", "deep-circuit", "deep-stack")
             else "custom", cfg.circuit)]


def train_arm(cfg: RunConfig, source: str, seed: int, train, val, test) -> tuple[TrainReport, dict]:
    if source == "mlp":
        mlp = MlpSpec(cfg.channels, cfg.mlp_hidden, cfg.classes)
        tc = dataclasses.replace(cfg.train_config(seed, "adam"), learning_rate=cfg.mlp_lr)
        report = mlp_fit(mlp, tc, train, val, test)
        model = {"kind": "mlp", "input_dim": mlp.input_dim, "hidden_dim": mlp.hidden_dim,
                 "output_dim": mlp.output_dim}
        return report, {"model_spec": model, "train_config": tc.to_dict()}
    spec = resolve_circuit(source, cfg.channels, cfg.depth)
    tc = cfg.train_config(seed)
    report = fit(spec, tc, train, val, test)
    model = {"kind": "circuit", "circuit": spec.to_text(), "name": spec.name}
    return report, {"model_spec": model, "train_config": tc.to_dict()}


def _stats(values: list[float]) -> dict:
    return {
        "values": values,
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "min": min(values),
        "max": max(values),
    }


def run_experiment(name: str | RunConfig, seeds=None, overrides: dict | None = None,
                   out_dir=None) -> dict:
    """Run one experiment and return its summary; writes files when ``out_dir`` is set.

    ``seeds`` is a count (consecutive seeds from ``seed``) or an explicit list.
    """
    if isinstance(name, RunConfig):
        cfg = name
    else:
        values = dict(overrides or {})
        values["experiment"] = name
        cfg = RunConfig.from_mapping(values)
    seed_list = cfg.seed_list
    if seeds is not None:
        seed_list = list(range(cfg.seed, cfg.seed + seeds)) if isinstance(seeds, int) else list(seeds)
        cfg = dataclasses.replace(cfg, seeds=len(seed_list))

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        _write(out / "config.json", dumps({**cfg.to_dict(), "seed_list": seed_list}))

    arms = _arms(cfg)
    results = {arm: [] for arm, _ in arms}
    timing = []
    for seed in seed_list:
        data_hash, train, val, test = prepare(cfg, seed)
        for arm, source in arms:
            log.info("experiment %s arm %s seed %d", cfg.experiment, arm, seed)
            report, extra = train_arm(cfg, source, seed, train, val, test)
            doc = {"arm": arm, "experiment": cfg.experiment, "seed": seed,
                   "dataset_hash": data_hash, **extra, **report.to_dict()}
            results[arm].append(doc)
            timing.append(f"{arm} seed={seed} wall_time={report.wall_time:.6f}")
            if out is not None:
                run_dir = out / arm / f"seed_{seed}"
                _write(run_dir / "report.json", dumps(doc))
                _write(run_dir / "loss.csv", loss_csv(report))
                _write(run_dir / "confusion.csv", confusion_csv(report))

    summary = {"experiment": cfg.experiment, "seeds": seed_list, "arms": {}}
    for arm, docs in results.items():
        summary["arms"][arm] = {
            "param_count": docs[0]["param_count"],
            "optimizer": docs[0]["optimizer"],
            "dataset_hashes": [d["dataset_hash"] for d in docs],
            "epochs_run": [d["epochs_run"] for d in docs],
            "test_accuracy": _stats([d["test_accuracy"] for d in docs]),
            "val_accuracy": _stats([d["val_accuracy"] for d in docs]),
            "initial_train_loss": _stats([d["initial_train_loss"] for d in docs]),
            "final_train_loss": _stats([d["final_train_loss"] for d in docs]),
        }
    if out is not None:
        _write(out / "summary.json", dumps(summary))
        _write(out / "timing.txt", "\n".join(timing) + "\n")
        if cfg.experiment == "benchmark":
            csv_text, table = benchmark_table(summary)
            _write(out / "benchmark.csv", csv_text)
            _write(out / "benchmark.txt", table)
    summary["reports"] = results
    return summary


_BENCH_LABELS = {"vpc-single-stack": "VPC single-stack", "vpc-deep-stack": "VPC deep-stack",
                 "mlp": "MLP"}


def benchmark_table(summary: dict) -> tuple[str, str]:
    """CSV and aligned text renderings of the model comparison."""
    multi = len(summary["seeds"]) > 1
    header = ["model", "accuracy", "optimizer", "param_count"] + (["mean_range"] if multi else [])
    rows = []
    for arm, info in summary["arms"].items():
        acc = info["test_accuracy"]
        row = [_BENCH_LABELS.get(arm, arm), repr(acc["mean"]), info["optimizer"],
               str(info["param_count"])]
        if multi:
            half = (acc["max"] - acc["min"]) / 2
            row.append(f"{acc['mean']:.4f}±{half:.4f}")
        rows.append(row)
    csv_text = "".join(",".join(r) + "\n" for r in [header] + rows)
    shown = [header] + [[r[0], f"{float(r[1]):.4f}"] + r[2:] for r in rows]
    widths = [max(len(r[i]) for r in shown) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in shown]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return csv_text, "\n".join(lines) + "\n"


def gradcheck_point(spec, task: str, k: int, seed: int, max_tries: int = 100):
    """Random angles and input phases whose readout avoids the nonsmooth set."""
    rng = SplitMix64(seed, GRADCHECK_STREAM)
    for _ in range(max_tries):
        params = np.array(rng.uniforms(spec.param_count, -math.pi, math.pi))
        state = state_from_phases(rng.uniforms(spec.n_threads, -math.pi, math.pi))
        try:
            out, _ = forward(spec, params, state)
        except DegenerateAmplitudeError:
            continue
        if not near_nonsmooth(out, 1 if task == "binary" else k):
            return params, state
    raise RuntimeError("could not find a smooth sample point for the gradient check")
