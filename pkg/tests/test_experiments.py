import json

import pytest

from vpcircuit.errors import ConfigError
from vpcircuit.experiments import RunConfig, benchmark_table, parse_config_text, run_experiment

SMALL = {"channels": "8", "samples_per_class": "20", "epochs": "5"}


def _files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and p.name != "timing.txt"}


def test_run_config_defaults_and_validation():
    assert RunConfig(experiment="binary").classes == 2
    assert RunConfig().classes == 4
    for kwargs in ({"experiment": "nope"}, {"experiment": "binary", "classes": 4}, {"seeds": 0},
                   {"epochs": 0}, {"optimizer": "sgd"}, {"batch": "half"}):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)


def test_from_mapping_coerces_and_rejects_unknown_keys():
    cfg = RunConfig.from_mapping({"epochs": "7", "lr": "0.1", "kink-guard": "false", "data": "none"})
    assert cfg.epochs == 7 and cfg.lr == 0.1 and cfg.kink_guard is False and cfg.data is None
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"epoch": "3"})
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"epochs": "many"})


def test_parse_config_text():
    text = "# comment\nepochs = 3\n\nnoise-sigma=0.2  # trailing\n"
    assert parse_config_text(text) == {"epochs": "3", "noise_sigma": "0.2"}
    with pytest.raises(ConfigError):
        parse_config_text("epochs 3")


def test_binary_experiment_files(tmp_path):
    summary = run_experiment("binary", overrides=SMALL, out_dir=tmp_path)
    run = tmp_path / "single-stack" / "seed_0"
    report = json.loads((run / "report.json").read_text())
    assert report["param_count"] == 16 and report["task"] == "binary"
    assert report["dataset_hash"] == summary["arms"]["single-stack"]["dataset_hashes"][0]
    loss = (run / "loss.csv").read_text().splitlines()
    assert loss[0] == "epoch,train_loss,val_loss" and len(loss) == 6
    assert len((run / "confusion.csv").read_text().splitlines()) == 2
    assert json.loads((tmp_path / "config.json").read_text())["epochs"] == 5
    assert "wall_time" in (tmp_path / "timing.txt").read_text()


def test_multiclass_default_is_single_stack_64():
    summary = run_experiment("multiclass", overrides={"epochs": "1", "samples_per_class": "8"})
    assert summary["arms"]["single-stack"]["param_count"] == 64


def test_deep_ablation_arms_match_budgets():
    summary = run_experiment("deep_ablation", seeds=2, overrides={"epochs": "2", "samples_per_class": "8"})
    dc, ds = summary["arms"]["deep-circuit"], summary["arms"]["deep-stack"]
    assert dc["param_count"] == ds["param_count"] == 128
    assert dc["dataset_hashes"] == ds["dataset_hashes"]
    assert dc["epochs_run"] == ds["epochs_run"] == [2, 2]


def test_benchmark_rows_and_table():
    summary = run_experiment("benchmark", seeds=2, overrides={"epochs": "2", "samples_per_class": "8"})
    counts = {arm: info["param_count"] for arm, info in summary["arms"].items()}
    assert counts == {"vpc-single-stack": 64, "vpc-deep-stack": 128, "mlp": 2372}
    csv_text, table = benchmark_table(summary)
    lines = csv_text.splitlines()
    assert lines[0] == "model,accuracy,optimizer,param_count,mean_range"
    assert lines[1].startswith("VPC single-stack,") and lines[3].startswith("MLP,")
    assert "±" in table


def test_reruns_are_byte_identical(tmp_path):
    run_experiment("deep_ablation", overrides={**SMALL, "depth": "2"}, out_dir=tmp_path / "a")
    run_experiment("deep_ablation", overrides={**SMALL, "depth": "2"}, out_dir=tmp_path / "b")
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a.keys() == b.keys() and a == b


def test_external_dataset(tmp_path):
    from vpcircuit.datagen import GenSpec, generate, write_dataset

    write_dataset(generate(GenSpec(n_channels=6, n_classes=2, samples_per_class=20)), tmp_path / "d.csv")
    s = run_experiment("binary", overrides={"data": str(tmp_path / "d.csv"), "channels": "6",
                                            "epochs": "2"})
    assert s["arms"]["single-stack"]["param_count"] == 12
    with pytest.raises(ConfigError):
        run_experiment("binary", overrides={"data": str(tmp_path / "d.csv"), "channels": "8"})
