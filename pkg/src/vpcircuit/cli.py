"""Command-line entry point: ``vpcircuit {generate,train,evaluate,gradcheck,benchmark}``.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 divergence or
degenerate amplitude, 5 gradient check above tolerance.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .autodiff import grad_check
from .core import resolve_circuit
from .datagen import read_dataset, stratified_split, write_dataset
from .errors import (
    ConfigError,
    DegenerateAmplitudeError,
    DimensionError,
    DivergenceError,
    InvalidInputError,
)
from .experiments import (
    RunConfig,
    dumps,
    gradcheck_point,
    load_data,
    parse_config_text,
    run_experiment,
)
from .readout import binary_mse_loss, multiclass_ce_loss
from .training import EncodedData, MlpSpec, evaluate, mlp_evaluate

log = logging.getLogger("vpcircuit")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIVERGENCE, EXIT_TOLERANCE = 0, 2, 3, 4, 5

# flag dest -> RunConfig key
_RUN_FLAGS = ("experiment", "seed", "seeds", "channels", "classes", "samples_per_class",
              "noise_sigma", "amplitude", "circuit", "depth", "epochs", "lr", "optimizer",
              "batch", "data", "max_evals")


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _common(p: argparse.ArgumentParser, default_experiment=None) -> None:
    p.add_argument("--config", metavar="FILE", help="flat key = value file (flags override it)")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, help="number of consecutive seeds")
    p.add_argument("--channels", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--samples-per-class", type=int)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--circuit", help="single-stack, deep-circuit, deep-stack or a layer list")
    p.add_argument("--depth", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--optimizer", choices=("adam", "derivative_free"))
    p.add_argument("--batch")
    p.add_argument("--max-evals", type=int)
    p.add_argument("--data", metavar="CSV", help="use this dataset instead of generating one")
    p.add_argument("--experiment", choices=("binary", "multiclass", "deep_ablation", "benchmark"),
                   default=None)
    p.set_defaults(default_experiment=default_experiment)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vpcircuit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV and its JSON sidecar")
    _common(p, "multiclass")

    p = sub.add_parser("train", help="run an experiment and write its reports")
    _common(p, "multiclass")

    p = sub.add_parser("evaluate", help="score a trained report on a dataset")
    _common(p, "multiclass")
    p.add_argument("--report", required=True, metavar="JSON", help="report.json from a training run")
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="test",
                   help="split of the regenerated dataset (ignored with --data)")

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    _common(p, "multiclass")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--fd-step", type=float, default=1e-5)

    p = sub.add_parser("benchmark", help="compare circuit variants with the dense baseline")
    _common(p, "benchmark")
    return parser


def resolve_config(args, experiment: str | None = None) -> RunConfig:
    """Defaults < config file < flags."""
    values = {}
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise _Fail(EXIT_IO, f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text, str(path)))
        file_out = values.pop("out", None)
        if args.out is None and file_out:
            args.out = file_out
    for key in _RUN_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    if experiment is not None:
        values["experiment"] = experiment
    if "experiment" not in values:
        two = str(values.get("classes", "")).strip() == "2"
        values["experiment"] = "binary" if two and args.default_experiment == "multiclass" \
            else args.default_experiment
    return RunConfig.from_mapping(values)


def _out_dir(args) -> Path:
    return Path(args.out) if args.out else Path("runs") / args.command


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {path}: {exc}") from None


def _echo(out: Path, cfg: RunConfig, **extra) -> None:
    text = dumps({**cfg.to_dict(), **extra})
    _write(out / "config.json", text)
    sys.stderr.write(text)


def cmd_generate(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(args)
    _echo(out, cfg, command="generate")
    data = load_data(cfg, cfg.seed)
    try:
        digest = write_dataset(data, out / "data.csv", cfg.gen_spec(cfg.seed))
    except OSError as exc:
        raise _Fail(EXIT_IO, str(exc)) from None
    print(f"wrote {len(data)} rows to {out / 'data.csv'}")
    print(f"dataset_hash {digest}")
    return EXIT_OK


def _print_summary(summary: dict) -> None:
    for arm, info in summary["arms"].items():
        acc = info["test_accuracy"]
        print(f"{arm}: params={info['param_count']} optimizer={info['optimizer']} "
              f"test_accuracy median={acc['median']:.4f} "
              f"[{acc['min']:.4f}, {acc['max']:.4f}] over {len(acc['values'])} seed(s)")


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(args)
    summary = run_experiment(cfg, out_dir=out)
    _print_summary(summary)
    print(f"reports in {out}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = resolve_config(args, "benchmark")
    out = _out_dir(args)
    run_experiment(cfg, out_dir=out)
    print((out / "benchmark.txt").read_text(), end="")
    return EXIT_OK


def _load_report(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot read report {path}: {exc}") from None
    except ValueError as exc:
        raise _Fail(EXIT_CONFIG, f"{path} is not valid JSON: {exc}") from None


def cmd_evaluate(args) -> int:
    report = _load_report(Path(args.report))
    try:
        model = report["model_spec"]
        params = np.array(report["params"], dtype=np.float64)
        task = report["task"]
    except KeyError as exc:
        raise _Fail(EXIT_CONFIG, f"report is missing {exc}") from None
    if args.seed is None:
        args.seed = report.get("seed", 0)
    if args.experiment is None and report.get("experiment") in ("binary", "multiclass"):
        args.experiment = report["experiment"]
    cfg = resolve_config(args)
    out = _out_dir(args)
    _echo(out, cfg, command="evaluate", report=str(args.report), split=args.split)
    if args.data:
        data = read_dataset(args.data)
        split = "all"
    else:
        data = load_data(cfg, cfg.seed)
        split = args.split
        if split != "all":
            parts = dict(zip(("train", "val", "test"), stratified_split(data, cfg.split_spec(cfg.seed))))
            data = parts[split]
    encoded = EncodedData.from_dataset(data)
    if model.get("kind") == "mlp":
        mlp = MlpSpec(model["input_dim"], model["hidden_dim"], model["output_dim"])
        ev = mlp_evaluate(mlp, params, encoded)
    else:
        spec = resolve_circuit(model["circuit"], encoded.re.shape[1])
        ev = evaluate(spec, params, encoded, task)
    result = {"accuracy": ev.accuracy, "confusion": ev.confusion.tolist(), "loss": ev.loss,
              "n_degenerate": ev.n_degenerate, "n_samples": len(encoded), "split": split,
              "dataset_hash": encoded.dataset_hash}
    _write(out / "eval.json", dumps(result))
    _write(out / "confusion.csv", ev.confusion.to_csv())
    print(f"accuracy {ev.accuracy:.4f} on {len(encoded)} samples ({split})")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    if args.channels is None and not args.config:
        args.channels = 4
    cfg = resolve_config(args)
    out = _out_dir(args)
    _echo(out, cfg, command="gradcheck", tol=args.tol, fd_step=args.fd_step)
    if not (args.tol >= 0 and args.fd_step > 0):
        raise _Fail(EXIT_CONFIG, "--tol must be >= 0 and --fd-step > 0")
    spec = resolve_circuit(cfg.circuit, cfg.channels, cfg.depth)
    task = cfg.task
    if task == "multiclass" and cfg.classes > spec.n_threads:
        raise _Fail(EXIT_CONFIG, "multiclass readout needs at least K threads")
    try:
        params, state = gradcheck_point(spec, task, cfg.classes, cfg.seed)
    except RuntimeError as exc:
        raise _Fail(EXIT_CONFIG, str(exc)) from None
    label = cfg.seed % cfg.classes
    loss = binary_mse_loss(label) if task == "binary" else multiclass_ce_loss(label, cfg.classes,
                                                                              cfg.kink_guard)
    report = grad_check(spec, params, state, loss, fd_step=args.fd_step)
    doc = {**report.to_dict(), "tol": args.tol, "passed": report.max_rel_err <= args.tol,
           "circuit": spec.to_text(), "task": task}
    _write(out / "gradcheck.json", dumps(doc))
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK if report.max_rel_err <= args.tol else EXIT_TOLERANCE


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "evaluate": cmd_evaluate,
            "gradcheck": cmd_gradcheck, "benchmark": cmd_benchmark}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, InvalidInputError, DimensionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DivergenceError as exc:
        print(f"diverged at epoch {exc.epoch}: loss {exc.loss!r}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except DegenerateAmplitudeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
