"""Multinomial logistic regression gate producing input-dependent mixing proportions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_softmax


@dataclass(frozen=True, eq=False)
class SoftmaxGate:
    """Coefficient matrix of shape ``(k, m + 1)``; the last column is the intercept."""

    coefficients: np.ndarray
    l2_penalty: float = 1e-4

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=np.float64)
        if coef.ndim != 2 or coef.shape[0] < 1:
            raise ValueError("coefficients must be a (k, m + 1) matrix")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)

    @property
    def k(self) -> int:
        return self.coefficients.shape[0]

    @property
    def n_features(self) -> int:
        return self.coefficients.shape[1] - 1

    def scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X @ self.coefficients[:, :-1].T + self.coefficients[:, -1]

    def log_proportions(self, X) -> np.ndarray:
        return log_softmax(self.scores(X), axis=1)

    def predict_proportions(self, X) -> np.ndarray:
        """Softmax of the linear scores; a 1-D ``X`` gives a single K-vector."""
        s = self.scores(X)
        s = s - s.max(axis=1, keepdims=True)
        e = np.exp(s)
        p = e / e.sum(axis=1, keepdims=True)
        return p[0] if np.ndim(X) == 1 else p

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "coefficients": self.coefficients.tolist(),
            "l2_penalty": self.l2_penalty,
            "intercept": True,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SoftmaxGate":
        gate = cls(d["coefficients"], d.get("l2_penalty", 1e-4))
        if gate.n_features != d.get("n_features", gate.n_features):
            raise ValueError("gate coefficient shape disagrees with n_features")
        return gate


def _design(X):
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def gate_loss_and_grad(W, X1, Y, l2_penalty):
    """Mean cross-entropy plus ``l2/2 * ||W[:, :-1]||^2`` and its gradient.

    ``X1`` carries a trailing column of ones; ``Y`` is one-hot ``(n, k)``.
    """
    n = X1.shape[0]
    logp = log_softmax(X1 @ W.T, axis=1)
    slopes = W[:, :-1]
    loss = -np.sum(Y * logp) / n + 0.5 * l2_penalty * np.sum(slopes * slopes)
    grad = (np.exp(logp) - Y).T @ X1 / n
    grad[:, :-1] += l2_penalty * slopes
    return loss, grad


def fit_gate(features, labels, k, l2_penalty=1e-4, max_iters=500, tol=1e-6, return_trace=False):
    """Fit the gate to hard cluster labels ``0..k-1``.

    Starts from all-zero coefficients and runs L-BFGS until the gradient
    max-norm drops below ``tol`` or ``max_iters`` is reached. With
    ``return_trace`` the per-iteration loss values are returned as well.
    """
    X1 = _design(features)
    labels = np.asarray(labels).reshape(-1)
    n, width = X1.shape
    if labels.shape[0] != n:
        raise ValueError("labels and features disagree in length")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in 0..{k - 1}")
    counts = np.bincount(labels.astype(np.int64), minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise ValueError(f"cluster(s) {empty.tolist()} have no members; repair clusters before fitting the gate")

    if k == 1:
        gate = SoftmaxGate(np.zeros((1, width)), l2_penalty)
        return (gate, [0.0]) if return_trace else gate

    Y = np.zeros((n, k))
    Y[np.arange(n), labels] = 1.0

    def fun(w):
        loss, grad = gate_loss_and_grad(w.reshape(k, width), X1, Y, l2_penalty)
        return loss, grad.ravel()

    trace = [fun(np.zeros(k * width))[0]]

    def record(intermediate_result):
        trace.append(float(intermediate_result.fun))

    res = minimize(
        fun, np.zeros(k * width), jac=True, method="L-BFGS-B",
        callback=record if return_trace else None,
        options={"maxiter": max_iters, "gtol": tol, "ftol": 0.0, "maxcor": 20},
    )
    gate = SoftmaxGate(res.x.reshape(k, width), l2_penalty)
    return (gate, trace) if return_trace else gate
