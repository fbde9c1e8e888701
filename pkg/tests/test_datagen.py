import math

import numpy as np
import pytest

from vpcircuit.datagen import (
    Dataset,
    GenSpec,
    SplitSpec,
    class_template,
    generate,
    read_dataset,
    stratified_split,
    write_dataset,
)
from vpcircuit.encoding import encode_phases
from vpcircuit.errors import ConfigError, InvalidInputError, InvalidSplitError


def test_templates():
    assert np.array_equal(class_template(0, 4, 1.5), np.zeros(4))
    assert np.array_equal(class_template(1, 4, 1.5), [1.5, 1.5, -1.5, -1.5])
    for n in (4, 5, 32):
        assert np.array_equal(class_template(2, n, 1.5), class_template(1, n, 1.5)[::-1])
    ramp = class_template(3, 5, 1.5)
    assert np.allclose(ramp, [-3.0, -1.5, 0.0, 1.5, 3.0], atol=1e-15)
    with pytest.raises(InvalidInputError):
        class_template(4, 4, 1.0)


def test_zero_noise_reproduces_templates():
    data = generate(GenSpec(n_channels=6, samples_per_class=3, noise_sigma=0.0))
    for row, label in zip(data.values, data.labels):
        assert np.array_equal(row, class_template(int(label), 6, 1.5))


def test_generation_is_deterministic_and_seeded():
    spec = GenSpec(n_channels=8, samples_per_class=10, seed=42)
    a, b = generate(spec), generate(spec)
    assert a.to_csv() == b.to_csv() and a.hash() == b.hash()
    c = generate(GenSpec(n_channels=8, samples_per_class=10, seed=43))
    assert not np.array_equal(a.values, c.values)


def test_frozen_first_value():
    # first noise draw of stream (seed 0, class 0, sample 0), times sigma 0.5
    data = generate(GenSpec(n_channels=4, samples_per_class=1))
    from vpcircuit.prng import SplitMix64

    assert data.values[0, 0] == 0.5 * SplitMix64(0, 0, 0).normals(1)[0]


def test_balance_and_binary_task():
    four = generate(GenSpec(samples_per_class=7))
    assert np.array_equal(four.class_counts(), [7, 7, 7, 7])
    two = generate(GenSpec(n_classes=2, samples_per_class=5, noise_sigma=0.0, n_channels=4))
    assert two.class_names == ("left_mi", "right_mi")
    assert np.array_equal(two.values[0], class_template(1, 4, 1.5))
    assert np.array_equal(two.values[5], class_template(2, 4, 1.5))


@pytest.mark.parametrize("kwargs", [{"n_classes": 3}, {"n_channels": 1}, {"noise_sigma": -1.0},
                                    {"samples_per_class": 0}])
def test_genspec_validation(kwargs):
    with pytest.raises(ConfigError):
        GenSpec(**kwargs)


def test_split_sizes_partition_and_determinism():
    data = generate(GenSpec(n_channels=4, samples_per_class=100))
    train, val, test = stratified_split(data, SplitSpec())
    assert np.array_equal(train.class_counts(), [60] * 4)
    assert np.array_equal(val.class_counts(), [15] * 4)
    assert np.array_equal(test.class_counts(), [25] * 4)
    rows = np.vstack([train.values, val.values, test.values])
    key = lambda arr: sorted(map(tuple, arr))
    assert key(rows) == key(data.values)
    again = stratified_split(data, SplitSpec())
    assert all(a.hash() == b.hash() for a, b in zip((train, val, test), again))
    other = stratified_split(data, SplitSpec(seed=1))
    assert other[0].hash() != train.hash()


def test_split_balance_with_uneven_sizes():
    data = generate(GenSpec(n_channels=4, samples_per_class=37))
    parts = stratified_split(data, SplitSpec())
    for part in parts:
        counts = part.class_counts()
        assert counts.max() - counts.min() <= 1


def test_split_errors():
    with pytest.raises(InvalidSplitError):
        SplitSpec(0.5, 0.5, 0.0)
    with pytest.raises(InvalidSplitError):
        SplitSpec(0.5, 0.3, 0.3)
    with pytest.raises(InvalidSplitError):
        stratified_split(generate(GenSpec(n_channels=4, samples_per_class=2)), SplitSpec())


def test_csv_round_trip(tmp_path):
    spec = GenSpec(n_channels=5, samples_per_class=4, seed=3)
    data = generate(spec)
    digest = write_dataset(data, tmp_path / "d.csv", spec)
    back = read_dataset(tmp_path / "d.csv")
    assert np.array_equal(back.values, data.values) and np.array_equal(back.labels, data.labels)
    assert back.class_names == data.class_names and back.hash() == digest
    header = (tmp_path / "d.csv").read_text().splitlines()[0]
    assert header == "label,ch0,ch1,ch2,ch3,ch4"


def test_read_dataset_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,a,b\n0,1,2\n")
    with pytest.raises(InvalidInputError):
        read_dataset(bad)
    bad.write_text("label,ch0,ch1\n0,1\n")
    with pytest.raises(InvalidInputError):
        read_dataset(bad)
    with pytest.raises(OSError):
        read_dataset(tmp_path / "missing.csv")


def _circ_mean(phases):
    return np.angle(np.mean(np.exp(1j * phases), axis=0))


def test_default_templates_are_separable_after_encoding():
    data = generate(GenSpec())
    phases = encode_phases(data.values)
    means = [_circ_mean(phases[data.labels == c]) for c in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            d = np.abs(np.angle(np.exp(1j * (means[i] - means[j]))))
            assert np.mean(d > 0.5) >= 0.5, (i, j)


def test_dataset_validation():
    with pytest.raises(InvalidInputError):
        Dataset(np.zeros((3, 2)), np.zeros(2))
