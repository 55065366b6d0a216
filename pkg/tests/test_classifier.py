import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from survmixclust.classifier import SoftmaxGate, fit_gate, gate_loss_and_grad


def central_difference(f, w, eps=1e-6):
    g = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        up, down = w.copy(), w.copy()
        up[idx] += eps
        down[idx] -= eps
        g[idx] = (f(up) - f(down)) / (2 * eps)
    return g


def random_problem(rng):
    n, m, k = rng.integers(3, 30), rng.integers(1, 5), rng.integers(2, 5)
    X1 = np.hstack([rng.standard_normal((n, m)), np.ones((n, 1))])
    Y = np.eye(k)[rng.integers(0, k, n)]
    W = rng.standard_normal((k, m + 1))
    return W, X1, Y, float(rng.choice([0.0, 1e-4, 0.5]))


def test_gradient_matches_finite_differences(rng):
    for _ in range(20):
        W, X1, Y, l2 = random_problem(rng)
        _, grad = gate_loss_and_grad(W, X1, Y, l2)
        fd = central_difference(lambda w: gate_loss_and_grad(w, X1, Y, l2)[0], W)
        err = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
        assert err < 1e-5


def test_intercept_is_not_penalized():
    X1 = np.array([[0.0, 1.0], [0.0, 1.0]])
    Y = np.array([[1.0, 0.0], [0.0, 1.0]])
    W = np.array([[0.0, 5.0], [0.0, -5.0]])
    base, _ = gate_loss_and_grad(W, X1, Y, 0.0)
    assert gate_loss_and_grad(W, X1, Y, 10.0)[0] == base


def test_loss_trace_non_increasing(rng):
    X = rng.standard_normal((200, 3))
    labels = rng.integers(0, 3, 200)
    _, trace = fit_gate(X, labels, 3, return_trace=True)
    assert len(trace) > 2
    assert np.all(np.diff(trace) <= 1e-12)


def test_two_cluster_proportions_example():
    gate = SoftmaxGate([[0.0, np.log(2.0)], [0.0, 0.0]])
    np.testing.assert_allclose(gate.predict_proportions(np.array([3.0])), [2 / 3, 1 / 3], atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (4, 3), elements=st.floats(-50, 50)),
       arrays(np.float64, (6, 2), elements=st.floats(-50, 50)))
def test_proportions_on_simplex(coef, X):
    p = SoftmaxGate(coef).predict_proportions(X)
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(1), 1.0, atol=1e-12)


def test_separable_data_classified_perfectly(rng):
    X = np.vstack([rng.normal(-4, 1, (100, 2)), rng.normal(4, 1, (100, 2))])
    y = np.repeat([0, 1], 100)
    gate = fit_gate(X, y, 2)
    assert np.mean(np.argmax(gate.predict_proportions(X), 1) == y) == 1.0


def test_feature_independent_labels_recover_frequencies(rng):
    n = 5000
    X = rng.standard_normal((n, 2))
    y = rng.choice(3, n, p=[0.5, 0.3, 0.2])
    p = fit_gate(X, y, 3).predict_proportions(X)
    freq = np.bincount(y, minlength=3) / n
    assert np.max(np.abs(p - freq)) < 0.05


def test_empty_class_raises(rng):
    with pytest.raises(ValueError, match="no members"):
        fit_gate(rng.standard_normal((5, 2)), [0, 0, 1, 1, 0], 3)


def test_single_cluster_gate():
    gate = fit_gate(np.zeros((4, 2)), [0, 0, 0, 0], 1)
    np.testing.assert_array_equal(gate.predict_proportions(np.ones((3, 2))), 1.0)


def test_feature_count_checked():
    with pytest.raises(ValueError, match="features"):
        SoftmaxGate(np.zeros((2, 3))).predict_proportions(np.zeros((1, 4)))


def test_roundtrip(rng):
    gate = SoftmaxGate(rng.standard_normal((3, 4)), 0.01)
    back = SoftmaxGate.from_dict(gate.to_dict())
    np.testing.assert_array_equal(back.coefficients, gate.coefficients)
    assert back.l2_penalty == 0.01
