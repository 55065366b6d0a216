"""Resplit benchmark: 60/20/20 censoring-stratified splits, CV-selected k, test metrics.

For every resplit the preprocessing is fitted on train+validation, k is
chosen by 3-fold CV on train+validation, the model is refitted there, and
metrics are computed on the held-out test part. Output is one long-format
row per (resplit, model, metric).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from .baselines import K_GRID, kmeans_survival_fit
from .data import ColumnSchema, apply_preprocess, fit_preprocess, stratified_split_indices
from .metrics import logrank_test
from .mixture import FitConfig, fit
from .protocol import best_k, concordance, cross_validate_k

MODELS = ("survmixclust", "kmeans_survival")
METRICS = ("k", "c_index", "logrank_stat", "logrank_p")
FIELDS = ("resplit", "model", "metric", "value")


def resplit_seeds(master_seed, n_resplits) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master_seed).spawn(n_resplits)]


def _choose_k(dataset, k_grid, fit_fn, n_folds, seed):
    if len(k_grid) == 1:
        return k_grid[0]
    return best_k(cross_validate_k(dataset, k_grid, fit_fn, n_folds, seed))


def _test_metrics(model, test):
    out = {"k": float(model.k), "c_index": concordance(model, test)}
    groups = model.predict_cluster(test.features)
    if np.unique(groups).size >= 2 and test.events.any():
        lr = logrank_test(groups, test.times, test.events)
        out["logrank_stat"], out["logrank_p"] = lr.statistic, lr.p_value
    else:
        out["logrank_stat"] = out["logrank_p"] = math.nan
    return out


def run_resplit(table: pd.DataFrame, schema: ColumnSchema, resplit: int, seed: int,
                k_grid=K_GRID, config: FitConfig = FitConfig(), n_folds=3) -> list[dict]:
    events = np.asarray(table[schema.event_column], dtype=bool)
    train, val, test = stratified_split_indices(events, (0.6, 0.2, 0.2), seed)
    dev_idx = np.sort(np.concatenate([train, val]))
    recipe = fit_preprocess(table.iloc[dev_idx].reset_index(drop=True), schema)
    dev = apply_preprocess(table.iloc[dev_idx].reset_index(drop=True), recipe)
    held = apply_preprocess(table.iloc[test].reset_index(drop=True), recipe)
    k_grid = sorted({int(k) for k in k_grid})
    config = replace(config, seed=seed)

    def fit_mix(ds, k):
        return fit(ds, replace(config, k=k))

    def fit_km(ds, k):
        return kmeans_survival_fit(ds, k, seed)

    rows = []
    for name, fit_fn in (("survmixclust", fit_mix), ("kmeans_survival", fit_km)):
        k = _choose_k(dev, k_grid, fit_fn, n_folds, seed)
        values = _test_metrics(fit_fn(dev, k), held)
        rows.extend({"resplit": resplit, "model": name, "metric": m, "value": values[m]} for m in METRICS)
    return rows


def _write_rows(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({**r, "value": repr(float(r["value"]))})


def _job(args):
    table, schema, resplit, seed, k_grid, config, n_folds, out_dir = args
    rows = run_resplit(table, schema, resplit, seed, k_grid, config, n_folds)
    _write_rows(Path(out_dir) / f"resplit_{resplit:03d}.csv", rows)
    return resplit


def run_benchmark(table, schema, out_dir, master_seed=0, n_resplits=20, k_grid=K_GRID,
                  config: FitConfig = FitConfig(), n_folds=3, jobs=1) -> pd.DataFrame:
    """Run every resplit, write per-resplit CSVs and the merged ``benchmark.csv``."""
    out_dir = Path(out_dir)
    part_dir = out_dir / "resplits"
    part_dir.mkdir(parents=True, exist_ok=True)
    seeds = resplit_seeds(master_seed, n_resplits)
    jobs_args = [(table, schema, r, s, tuple(k_grid), config, n_folds, str(part_dir)) for r, s in enumerate(seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_job, jobs_args))
    else:
        for a in jobs_args:
            _job(a)
    merged = pd.concat(
        [pd.read_csv(part_dir / f"resplit_{r:03d}.csv") for r in range(n_resplits)], ignore_index=True
    )
    merged.to_csv(out_dir / "benchmark.csv", index=False, float_format="%.17g")
    return merged


def summarize(table: pd.DataFrame) -> pd.DataFrame:
    return table.groupby(["model", "metric"])["value"].agg(["mean", "std", "median", "count"]).reset_index()
