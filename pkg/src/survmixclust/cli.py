"""Command-line interface: synth, split, fit, predict, evaluate, benchmark.

Exit status is 0 on success, 2 on usage errors and 1 on runtime errors.
Results go to files; messages go to stderr. Cluster numbers in output files
are 1-based.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import replace
from functools import wraps
from pathlib import Path

import click
import numpy as np

from . import benchmark as bench
from .baselines import KMeansSurvivalModel, kmeans_survival_fit
from .data import (
    ColumnSchema,
    apply_preprocess,
    encode_features,
    fit_preprocess,
    load_csv,
    stratified_split_indices,
    write_csv,
)
from .metrics import CurvePredictions, logrank_test, td_c_index
from .mixture import FitConfig, fit, select_k
from .protocol import best_k, cross_validate_k, evaluation_grid
from .serialize import load_model, save_model
from .synth import SynthSpec, generate


def parse_k_grid(text: str) -> list[int]:
    """``"2..7"`` or ``"2,3,5"``."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split(".."))
            ks = list(range(lo, hi + 1))
        else:
            ks = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise click.BadParameter(f"expected 'a..b' or a comma list, got {text!r}") from None
    if not ks or min(ks) < 1:
        raise click.BadParameter(f"empty or invalid k grid {text!r}")
    return ks


def _runtime_errors(fn):
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, FileNotFoundError, RuntimeError, KeyError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc
    return wrapper


def _fit_options(fn):
    opts = [
        click.option("--k", "k", type=int, default=None, help="Number of clusters."),
        click.option("--k-grid", default=None, help="Candidate k values for 3-fold CV, e.g. 2..7."),
        click.option("--restarts", type=int, default=5, show_default=True),
        click.option("--max-iters", type=int, default=100, show_default=True),
        click.option("--churn-tol", type=float, default=1e-3, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--tau0", type=float, default=0.0, show_default=True, help="Outlier component weight."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _config(k, restarts, max_iters, churn_tol, seed, tau0) -> FitConfig:
    return FitConfig(k=k or 2, n_restarts=restarts, max_iters=max_iters, churn_tol=churn_tol,
                     seed=seed, outlier_weight=tau0)


@click.group()
def main():
    """Clustering of right-censored survival data with a mixture of Kaplan-Meier experts."""


@main.command("synth")
@click.option("--spec", "spec_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="CSV to write.")
@click.option("--schema-out", type=click.Path(dir_okay=False), default=None,
              help="Also write a matching schema JSON.")
@_runtime_errors
def cmd_synth(spec_path, out, schema_out):
    """Generate synthetic data from a JSON generator spec."""
    text = Path(spec_path).read_text(encoding="utf-8")
    try:
        spec = SynthSpec.from_json(text)
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{spec_path}: JSON parse error: {exc}") from exc
    dataset, labels = generate(spec)
    write_csv(dataset, out, extra={"true_cluster": labels + 1})
    if schema_out:
        ColumnSchema("time", "event", tuple((n, "continuous") for n in dataset.feature_names)).save(schema_out)
    click.echo(f"wrote {dataset.n} rows to {out}", err=True)


@main.command("split")
@click.option("--data", required=True, type=click.Path(dir_okay=False))
@click.option("--schema", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--fractions", default="0.6,0.2,0.2", show_default=True)
@_runtime_errors
def cmd_split(data, schema, out, seed, fractions):
    """Censoring-stratified train/val/test split of a CSV (rows copied verbatim)."""
    import pandas as pd

    sch = ColumnSchema.load(schema)
    table = load_csv(data, sch)
    fracs = [float(f) for f in fractions.split(",")]
    parts = stratified_split_indices(np.asarray(table[sch.event_column]), fracs, seed)
    raw = pd.read_csv(data, dtype=str, keep_default_na=False)
    names = ("train", "val", "test") if len(parts) == 3 else tuple(f"part{i}" for i in range(len(parts)))
    Path(out).mkdir(parents=True, exist_ok=True)
    for name, idx in zip(names, parts):
        raw.iloc[idx].to_csv(Path(out) / f"{name}.csv", index=False)


def _write_diagnostics(path, model):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["restart", "iteration", "churn", "log_likelihood", "selected"])
        for t in model.diagnostics:
            sel = int(t.restart == model.selected_restart)
            if t.error:
                w.writerow([t.restart, "", "", "", sel])
                continue
            w.writerow([t.restart, 0, "", repr(t.init_log_likelihood), sel])
            for i, (c, ll) in enumerate(zip(t.churn, t.log_likelihood), start=1):
                w.writerow([t.restart, i, c, repr(ll), sel])


def _write_cv_report(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["k", "fold", "n_train", "n_heldout", "c_index"])
        w.writeheader()
        for r in rows:
            w.writerow({**r, "c_index": repr(r["c_index"])})


@main.command("fit")
@click.option("--data", required=True, type=click.Path(dir_okay=False))
@click.option("--schema", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Model JSON to write.")
@_fit_options
@click.option("--baseline", type=click.Choice(["kmeans"]), default=None, help="Fit K-means Survival instead.")
@click.option("--folds", type=int, default=3, show_default=True)
@_runtime_errors
def cmd_fit(data, schema, out, k, k_grid, restarts, max_iters, churn_tol, seed, tau0, baseline, folds):
    """Fit a model; writes the model JSON plus diagnostics / CV report CSVs next to it."""
    if k is not None and k_grid is not None:
        raise click.UsageError("--k and --k-grid are mutually exclusive")
    sch = ColumnSchema.load(schema)
    table = load_csv(data, sch)
    recipe = fit_preprocess(table, sch)
    dataset = apply_preprocess(table, recipe)
    grid = parse_k_grid(k_grid) if k_grid else None
    config = _config(k, restarts, max_iters, churn_tol, seed, tau0)
    stem = Path(out).with_suffix("")
    cv_rows = None

    if baseline == "kmeans":
        def fit_km(ds, kk):
            return kmeans_survival_fit(ds, kk, seed)
        chosen = config.k
        if grid:
            cv_rows = cross_validate_k(dataset, grid, fit_km, folds, seed)
            chosen = best_k(cv_rows)
        model = fit_km(dataset, chosen)
    elif grid:
        selection = select_k(dataset, grid, config, folds)
        cv_rows, model = selection.report, selection.model
    else:
        model = fit(dataset, config)

    training = {"n": dataset.n, "time_max": float(dataset.times.max()), "seed": seed}
    save_model(out, model, recipe, training)
    if cv_rows is not None:
        _write_cv_report(f"{stem}.cv.csv", cv_rows)
    if not isinstance(model, KMeansSurvivalModel):
        _write_diagnostics(f"{stem}.diagnostics.csv", model)
    click.echo(f"fitted k={model.k} on {dataset.n} rows -> {out}", err=True)


def _load_for_inference(model_path, data, schema):
    model, recipe, training = load_model(model_path)
    if recipe is None:
        raise ValueError(f"{model_path} has no preprocessing recipe")
    sch = ColumnSchema.load(schema) if schema else recipe.schema
    if sch != recipe.schema:
        recipe = replace(recipe, schema=sch)
    table = load_csv(data, sch, require_labels=False)
    labelled = sch.time_column in table.columns
    dataset = apply_preprocess(table, recipe) if labelled else None
    X = dataset.features if labelled else encode_features(table, recipe)
    return model, training, X, dataset


@main.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False))
@click.option("--data", required=True, type=click.Path(dir_okay=False))
@click.option("--schema", type=click.Path(dir_okay=False), default=None,
              help="Override the schema stored in the model.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--grid-points", type=int, default=100, show_default=True)
@click.option("--grid-max", type=float, default=None, help="Default: training max time.")
@_runtime_errors
def cmd_predict(model_path, data, schema, out, grid_points, grid_max):
    """Per-subject survival curves plus cluster and uncertainty columns."""
    if grid_points < 2:
        raise click.BadParameter("--grid-points must be >= 2")
    model, training, X, dataset = _load_for_inference(model_path, data, schema)
    t_max = grid_max if grid_max is not None else training.get("time_max", 1.0)
    grid = np.linspace(0.0, t_max, grid_points)
    curves = model.predict_survival(X, grid)
    cluster = np.asarray(model.predict_cluster(X))
    if isinstance(model, KMeansSurvivalModel):
        uncertainty = np.zeros(len(X))
    elif dataset is not None:
        uncertainty = model.cluster_uncertainty(dataset)
    else:
        uncertainty = 1.0 - model.gate.predict_proportions(X).max(axis=1)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "cluster", "uncertainty"] + [f"S@{t:.10g}" for t in grid])
        for i in range(len(X)):
            w.writerow([i + 1, int(cluster[i]) + 1, repr(float(uncertainty[i]))]
                       + [repr(float(v)) for v in curves[i]])


@main.command("evaluate")
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False))
@click.option("--data", required=True, type=click.Path(dir_okay=False))
@click.option("--schema", type=click.Path(dir_okay=False), default=None)
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Metrics JSON to write.")
@_runtime_errors
def cmd_evaluate(model_path, data, schema, out):
    """td-C-index, log-rank over predicted clusters, and cluster sizes."""
    model, _, _, dataset = _load_for_inference(model_path, data, schema)
    if dataset is None:
        raise ValueError("evaluation needs the time and event columns")
    grid = evaluation_grid(dataset.times)
    c = td_c_index(CurvePredictions(grid, model.predict_survival(dataset.features, grid)),
                   dataset.times, dataset.events)
    groups = np.asarray(model.predict_cluster(dataset.features))
    sizes = np.bincount(groups, minlength=model.k)
    if np.count_nonzero(sizes) < 2:
        logrank = {"omitted": "fewer than two non-empty predicted clusters"}
    elif not dataset.events.any():
        logrank = {"omitted": "no events"}
    else:
        logrank = logrank_test(groups, dataset.times, dataset.events).to_dict()
    report = {"n": dataset.n, "k": model.k, "c_index": c, "logrank": logrank,
              "cluster_sizes": [int(s) for s in sizes]}
    Path(out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


@main.command("benchmark")
@click.option("--data", required=True, type=click.Path(dir_okay=False))
@click.option("--schema", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--k-grid", default="2..7", show_default=True)
@click.option("--restarts", type=int, default=5, show_default=True)
@click.option("--max-iters", type=int, default=100, show_default=True)
@click.option("--churn-tol", type=float, default=1e-3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tau0", type=float, default=0.0, show_default=True)
@click.option("--resplits", type=int, default=20, show_default=True)
@click.option("--folds", type=int, default=3, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@_runtime_errors
def cmd_benchmark(data, schema, out, k_grid, restarts, max_iters, churn_tol, seed, tau0, resplits, folds, jobs):
    """Repeated-split comparison of SurvMixClust and K-means Survival."""
    sch = ColumnSchema.load(schema)
    table = load_csv(data, sch)
    config = _config(None, restarts, max_iters, churn_tol, seed, tau0)
    result = bench.run_benchmark(table, sch, out, seed, resplits, parse_k_grid(k_grid), config, folds, jobs)
    bench.summarize(result).to_csv(Path(out) / "summary.csv", index=False)
    click.echo(f"wrote {len(result)} rows to {Path(out) / 'benchmark.csv'}", err=True)


if __name__ == "__main__":
    sys.exit(main())
