import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpcircuit.autodiff import grad_check
from vpcircuit.core import PhasorState, deep_stack, single_stack, state_from_phases
from vpcircuit.errors import DegenerateAmplitudeError, DimensionError, InvalidInputError
from vpcircuit.readout import (
    accuracy,
    binary_mse_loss,
    binary_objective,
    binary_prob,
    confusion,
    cross_entropy,
    cross_entropy_grad,
    mse_grad,
    mse_loss,
    multiclass_ce_loss,
    multiclass_logits,
    multiclass_objective,
    predict,
    predict_binary,
    softmax,
)

logits_st = st.lists(st.floats(-50, 50), min_size=1, max_size=8)


@pytest.mark.parametrize("phi, p", [(math.pi / 2, 1.0), (0.0, 0.5), (-math.pi / 2, 0.0)])
def test_binary_prob_examples(phi, p):
    assert binary_prob(state_from_phases([phi, 0.3])) == pytest.approx(p, abs=1e-15)


def test_binary_prob_degenerate():
    with pytest.raises(DegenerateAmplitudeError):
        binary_prob(PhasorState([0.0], [1e-13]))


def test_multiclass_logits_examples():
    assert np.array_equal(multiclass_logits(state_from_phases([0.0] * 4), 4), np.zeros(4))
    out = multiclass_logits(state_from_phases([math.pi / 2, -math.pi / 2, 0.0, math.pi]), 4)
    assert np.allclose(out, [math.pi / 2, math.pi / 2, 0.0, math.pi], atol=1e-15)
    with pytest.raises(DimensionError):
        multiclass_logits(state_from_phases([0.0, 0.0]), 3)


def test_logits_invariant_under_conjugation(rng):
    s = state_from_phases(rng.uniform(-3, 3, 6))
    conj = PhasorState(s.re, -s.im)
    assert np.array_equal(multiclass_logits(s, 4), multiclass_logits(conj, 4))


def test_softmax_examples():
    assert np.allclose(softmax([0, 0, 0, 0]), 0.25, atol=1e-15)
    assert np.allclose(softmax([1.7, 1.7 + math.log(2)]), [1 / 3, 2 / 3], atol=1e-15)
    mpmath.mp.dps = 40
    top = float(mpmath.e ** mpmath.pi / (mpmath.e ** mpmath.pi + 3))
    assert softmax([math.pi, 0, 0, 0])[0] == pytest.approx(top, abs=1e-15)
    assert top == pytest.approx(0.8852363997334128, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(logits_st, st.floats(-100, 100))
def test_softmax_is_a_distribution_and_shift_invariant(logits, c):
    p = softmax(logits)
    assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-9
    assert np.allclose(softmax(np.asarray(logits) + c), p, atol=1e-12, rtol=0)


def test_mse_examples():
    assert mse_loss(0.7, 0.7) == 0.0
    assert mse_loss(0.5, 1) == 0.25
    assert mse_loss(0.3, 0) == pytest.approx(0.09, abs=1e-16)
    assert mse_grad(0.3, 0) == pytest.approx(0.6, abs=1e-16)


def test_cross_entropy_examples():
    assert cross_entropy([0.0, 1.0, 0.0], 1) == pytest.approx(0.0, abs=1e-11)
    for y in range(4):
        assert abs(cross_entropy([0.25] * 4, y) - math.log(4)) <= 1e-12
    g = cross_entropy_grad(softmax([0.3, -1.0, 2.0]), 2)
    assert abs(g.sum()) <= 1e-12 and g[2] < 0
    with pytest.raises(DimensionError):
        cross_entropy([0.5, 0.5], 2)


@settings(max_examples=100, deadline=None)
@given(logits_st, st.data())
def test_cross_entropy_nonnegative(logits, data):
    y = data.draw(st.integers(0, len(logits) - 1))
    assert cross_entropy(softmax(logits), y) >= 0


def test_predict_and_confusion():
    assert predict([0.25] * 4) == 0
    assert np.array_equal(predict([[0.1, 0.9], [0.5, 0.5]]), [1, 0])
    assert np.array_equal(predict_binary([0.5, 0.50001, 0.2]), [0, 1, 0])
    labels = np.array([0, 1, 2, 3, 3, 1])
    cm = confusion(labels, labels, 4)
    assert np.array_equal(cm.counts, np.diag([1, 2, 1, 2])) and accuracy(cm) == 1.0
    assert cm.to_csv().splitlines()[0] == "1,0,0,0"


def test_accuracy_invariant_under_relabelling(rng):
    labels = rng.integers(0, 4, 40)
    preds = rng.integers(0, 4, 40)
    perm = rng.permutation(4)
    a = accuracy(confusion(preds, labels, 4))
    b = accuracy(confusion(perm[preds], perm[labels], 4))
    assert a == b


def test_empty_evaluation_set():
    with pytest.raises(InvalidInputError):
        confusion([], [], 2)


def test_batched_objectives_match_per_state_closures(rng):
    phases = rng.uniform(-3, 3, (6, 5))
    re, im = np.cos(phases), np.sin(phases)
    labels = rng.integers(0, 4, 6)
    obj = multiclass_objective(re, im, labels, 4)
    for b in range(6):
        loss, cot = multiclass_ce_loss(int(labels[b]), 4)(PhasorState(re[b], im[b]))
        assert obj.per_sample[b] == pytest.approx(loss, abs=1e-14)
        assert np.allclose(obj.cot_re[b] * 6, cot.d_re, atol=1e-14)
        assert np.allclose(obj.cot_im[b] * 6, cot.d_im, atol=1e-14)
    bl = labels % 2
    obj = binary_objective(re, im, bl)
    for b in range(6):
        loss, cot = binary_mse_loss(int(bl[b]))(PhasorState(re[b], im[b]))
        assert obj.per_sample[b] == pytest.approx(loss, abs=1e-14)
        assert np.allclose(obj.cot_re[b] * 6, cot.d_re, atol=1e-14)


def test_composed_readout_gradients_match_finite_differences(rng):
    r = grad_check(single_stack(4), rng.uniform(-3, 3, 8), state_from_phases(rng.uniform(-3, 3, 4)),
                   binary_mse_loss(0))
    assert r.max_rel_err < 1e-5
    spec = deep_stack(6, 2)
    r = grad_check(spec, rng.uniform(-3, 3, spec.param_count),
                   state_from_phases(rng.uniform(-3, 3, 6)), multiclass_ce_loss(3, 4))
    assert r.max_rel_err < 1e-5


def test_kink_guard_zeroes_subgradient():
    s = state_from_phases([1e-8, 1.0, -2.0, 0.5])
    _, guarded = multiclass_ce_loss(0, 4, kink_guard=True)(s)
    _, raw = multiclass_ce_loss(0, 4, kink_guard=False)(s)
    assert guarded.d_re[0] == 0.0 and guarded.d_im[0] == 0.0
    assert raw.d_im[0] != 0.0
