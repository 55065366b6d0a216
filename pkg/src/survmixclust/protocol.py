"""Cross-validated choice of the number of clusters, shared by both model families."""

from __future__ import annotations

import numpy as np

from .data import SurvivalDataset, stratified_kfold_indices
from .metrics import CurvePredictions, td_c_index


def evaluation_grid(times) -> np.ndarray:
    """0 plus every observed time, so step curves are read exactly at each ``t_i``."""
    return np.unique(np.concatenate(([0.0], np.asarray(times, dtype=np.float64))))


def concordance(model, dataset: SurvivalDataset) -> float:
    """td-C-index of ``model.predict_survival`` on ``dataset``."""
    grid = evaluation_grid(dataset.times)
    curves = model.predict_survival(dataset.features, grid)
    return td_c_index(CurvePredictions(grid, curves), dataset.times, dataset.events)


def cross_validate_k(dataset: SurvivalDataset, k_grid, fit_fn, n_folds=3, seed=0) -> list[dict]:
    """One report row per (k, fold): held-out td-C-index of ``fit_fn(train, k)``."""
    folds = stratified_kfold_indices(dataset.events, n_folds, seed)
    rows = []
    for k in k_grid:
        for f, held in enumerate(folds):
            train_idx = np.setdiff1d(np.arange(dataset.n), held)
            train, heldout = dataset.subset(train_idx), dataset.subset(held)
            model = fit_fn(train, int(k))
            rows.append({
                "k": int(k), "fold": f, "n_train": train.n, "n_heldout": heldout.n,
                "c_index": concordance(model, heldout),
            })
    return rows


def best_k(rows) -> int:
    """k with the highest mean held-out td-C-index; ties go to the smaller k."""
    ks = sorted({r["k"] for r in rows})
    means = [np.mean([r["c_index"] for r in rows if r["k"] == k]) for k in ks]
    return ks[int(np.argmax(means))]
