"""K-means Survival: K-means on features, a Kaplan-Meier curve per cluster."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SurvivalDataset
from .nonparam import StepSurvivalFunction, kaplan_meier

K_GRID = (2, 3, 4, 5, 6, 7)


@dataclass(frozen=True, eq=False)
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    wcss_trace: tuple
    n_iter: int


def _sq_dist(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _assign(X, C):
    d = _sq_dist(X, C)
    return np.argmin(d, axis=1), d


def _wcss(X, C, labels):
    return float(((X - C[labels]) ** 2).sum())


def _seed_centroids(X, k, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)
        centers.append(X[idx])
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers, dtype=np.float64)


def kmeans_fit(features, k, seed=0, max_iters=300) -> KMeansResult:
    """Lloyd's algorithm from squared-distance-weighted seeding.

    Stops once an update leaves the labels unchanged. A cluster left empty
    takes over the point farthest from its current centroid.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < k:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    rng = np.random.default_rng(seed)
    C = _seed_centroids(X, k, rng)
    labels, d = _assign(X, C)
    trace = []
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        labels = _fill_empty(labels, d, k)
        C = np.vstack([X[labels == c].mean(axis=0) for c in range(k)])
        trace.append(_wcss(X, C, labels))
        new, d = _assign(X, C)
        if np.array_equal(new, labels):
            break
        labels = new
    return KMeansResult(C, labels, tuple(trace), n_iter)


def _fill_empty(labels, d, k):
    labels = labels.copy()
    for c in range(k):
        if not np.any(labels == c):
            own = d[np.arange(labels.size), labels]
            counts = np.bincount(labels, minlength=k)
            own = np.where(counts[labels] > 1, own, -np.inf)
            labels[int(np.argmax(own))] = c
    return labels


@dataclass(frozen=True, eq=False)
class KMeansSurvivalModel:
    centroids: np.ndarray
    curves: tuple

    @property
    def k(self) -> int:
        return len(self.curves)

    def predict_cluster(self, X):
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        labels = np.argmin(_sq_dist(np.atleast_2d(X), self.centroids), axis=1)
        return int(labels[0]) if single else labels

    def predict_survival(self, X, time_grid):
        return kmeans_survival_predict(self, X, time_grid)

    def to_dict(self) -> dict:
        return {
            "format": "survmixclust-model",
            "version": 1,
            "model_type": "kmeans_survival",
            "k": self.k,
            "n_features": int(self.centroids.shape[1]),
            "centroids": self.centroids.tolist(),
            "curves": [c.to_dict() for c in self.curves],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KMeansSurvivalModel":
        if d.get("model_type") != "kmeans_survival":
            raise ValueError(f"not a kmeans_survival model: {d.get('model_type')!r}")
        return cls(np.asarray(d["centroids"], dtype=np.float64),
                   tuple(StepSurvivalFunction.from_dict(c) for c in d["curves"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")


def kmeans_survival_fit(dataset: SurvivalDataset, k, seed=0, max_iters=300) -> KMeansSurvivalModel:
    """Cluster on features only, then one KM curve per cluster's members."""
    km = kmeans_fit(dataset.features, k, seed, max_iters)
    curves = []
    for c in range(k):
        members = km.labels == c
        if not members.any():
            raise ValueError(f"k-means cluster {c} has no members")
        curves.append(kaplan_meier(dataset.times[members], dataset.events[members]))
    return KMeansSurvivalModel(km.centroids, tuple(curves))


def kmeans_survival_predict(model: KMeansSurvivalModel, X, time_grid):
    """Nearest-centroid cluster's KM curve on ``time_grid`` (ties to the lowest index)."""
    grid = np.asarray(time_grid, dtype=np.float64).reshape(-1)
    table = np.vstack([c(grid) for c in model.curves])
    labels = model.predict_cluster(X)
    return table[labels]
