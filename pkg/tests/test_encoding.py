import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from vpcircuit.core import is_on_torus, state_from_phases
from vpcircuit.encoding import Snapshot, encode, encode_many, encode_phases, phase_encode, zscore
from vpcircuit.errors import ConstantSnapshotError, DimensionError, InvalidInputError

PI_TANH_1 = 2.3926186053675502  # mpmath, 40 digits

vectors = st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=16).filter(
    lambda v: np.std(v) > 1e-3
)


def test_zscore_examples():
    assert np.allclose(zscore([1.0, -1.0]), [1.0, -1.0], atol=1e-15)
    out = zscore([0.0, 1.0, 2.0])
    assert np.allclose(out, [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-15)
    with pytest.raises(ConstantSnapshotError):
        zscore([5.0, 5.0, 5.0])
    with pytest.raises(DimensionError):
        zscore([1.0])
    with pytest.raises(InvalidInputError):
        zscore([1.0, math.nan])


def test_phase_encode_examples():
    assert phase_encode([0.0])[0] == 0.0
    mpmath.mp.dps = 40
    assert float(mpmath.pi * mpmath.tanh(1)) == pytest.approx(PI_TANH_1, abs=1e-15)
    assert phase_encode([1.0])[0] == pytest.approx(PI_TANH_1, abs=1e-15)
    big = phase_encode([1e6, -1e6])
    assert abs(big[0]) <= math.pi and abs(big[1]) <= math.pi


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_zscore_moments(values):
    z = zscore(values)
    assert abs(z.mean()) <= 1e-10 and abs(z.std() - 1.0) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(vectors, st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_encoding_affine_invariance(values, a, b):
    x = np.asarray(values)
    # a huge offset over a tiny spread is ill-conditioned in any float arithmetic
    assume(abs(b) <= 1e4 * a * np.std(x))
    ref = encode(x)
    moved = encode(a * x + b)
    assert np.max(np.abs(moved.amps - ref.amps)) <= 1e-10
    assert is_on_torus(ref)
    assert np.all(np.abs(ref.phases()) < math.pi)


def test_sign_flip_negates_phases(rng):
    x = rng.normal(size=12)
    assert np.allclose(encode_phases(-2.5 * x), -encode_phases(x), atol=1e-12)


def test_encoding_is_monotone_per_channel(rng):
    x = rng.normal(size=20)
    order = np.argsort(x)
    assert np.all(np.diff(encode_phases(x)[order]) >= 0)


def test_encode_matches_composition_and_batch(rng):
    values = rng.normal(size=(5, 8))
    re, im = encode_many(values)
    for b in range(5):
        s = encode(Snapshot(values[b], 0))
        assert s == state_from_phases(phase_encode(zscore(values[b])))
        assert np.array_equal(s.re, re[b]) and np.array_equal(s.im, im[b])


def test_snapshot_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        Snapshot([1.0, math.inf], 0)
