"""Survival datasets: CSV ingestion, preprocessing and censoring-stratified splits."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

MISSING_TOKENS = ("", "NA")
MAX_CATEGORIES = 1000
_EVENT_TOKENS = {"0": False, "1": True, "false": False, "true": True}


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Features plus right-censored labels ``(time, event)``.

    ``row_ids`` identifies rows across splits; it defaults to ``0..n-1``.
    """

    features: np.ndarray
    times: np.ndarray
    events: np.ndarray
    feature_names: tuple = ()
    row_ids: np.ndarray | None = None

    def __post_init__(self):
        times = _frozen(self.times, np.float64).reshape(-1)
        events = _frozen(self.events, bool).reshape(-1)
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1) if features.size else np.zeros((times.size, 0))
        features = _frozen(features)
        n = times.shape[0]
        if events.shape[0] != n or features.shape[0] != n:
            raise ValueError(
                f"length mismatch: {features.shape[0]} feature rows, {n} times, {events.shape[0]} events"
            )
        if not np.all(np.isfinite(times)) or np.any(times < 0):
            raise ValueError("times must be finite and non-negative")
        if np.isnan(features).any():
            raise ValueError("features contain missing values; preprocess first")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(features.shape[1]))
        if len(names) != features.shape[1]:
            raise ValueError(f"{len(names)} feature names for {features.shape[1]} columns")
        row_ids = np.arange(n) if self.row_ids is None else self.row_ids
        row_ids = _frozen(row_ids, np.int64).reshape(-1)
        if row_ids.shape[0] != n:
            raise ValueError("row_ids length mismatch")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", row_ids)

    @property
    def n(self) -> int:
        return self.times.shape[0]

    def __len__(self):
        return self.n

    @property
    def censoring_rate(self) -> float:
        """Fraction of censored rows, ``sum(1(d_i = 0)) / N``."""
        return float(np.mean(~self.events)) if self.n else 0.0

    def subset(self, index) -> "SurvivalDataset":
        index = np.asarray(index)
        return SurvivalDataset(
            self.features[index], self.times[index], self.events[index],
            self.feature_names, self.row_ids[index],
        )

    @classmethod
    def concat(cls, parts: Sequence["SurvivalDataset"]) -> "SurvivalDataset":
        return cls(
            np.vstack([p.features for p in parts]),
            np.concatenate([p.times for p in parts]),
            np.concatenate([p.events for p in parts]),
            parts[0].feature_names,
            np.concatenate([p.row_ids for p in parts]),
        )


@dataclass(frozen=True)
class ColumnSchema:
    time_column: str
    event_column: str
    feature_columns: tuple = ()  # ((name, "continuous" | "categorical"), ...)

    def __post_init__(self):
        cols = tuple((str(name), str(kind)) for name, kind in self.feature_columns)
        object.__setattr__(self, "feature_columns", cols)
        if self.time_column == self.event_column:
            raise ValueError("time and event columns must differ")
        names = [name for name, _ in cols]
        if self.time_column in names or self.event_column in names:
            raise ValueError("time/event columns cannot also be features")
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature column")
        for name, kind in cols:
            if kind not in ("continuous", "categorical"):
                raise ValueError(f"feature {name!r}: unknown kind {kind!r}")

    @property
    def continuous(self) -> list[str]:
        return [name for name, kind in self.feature_columns if kind == "continuous"]

    @property
    def categorical(self) -> list[str]:
        return [name for name, kind in self.feature_columns if kind == "categorical"]

    @property
    def columns(self) -> list[str]:
        return [self.time_column, self.event_column] + [name for name, _ in self.feature_columns]

    def to_dict(self) -> dict:
        return {
            "time": self.time_column,
            "event": self.event_column,
            "features": [{"name": n, "kind": k} for n, k in self.feature_columns],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnSchema":
        try:
            feats = tuple((f["name"], f.get("kind", "continuous")) for f in d.get("features", []))
            return cls(d["time"], d["event"], feats)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed schema: {exc!r}") from exc

    @classmethod
    def load(cls, path) -> "ColumnSchema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def _is_missing(value: str) -> bool:
    return value.strip() in MISSING_TOKENS


def load_csv(path, schema: ColumnSchema, require_labels: bool = True) -> pd.DataFrame:
    """Read a CSV into a typed table restricted to the schema's columns.

    Continuous features become floats (NaN when missing), categorical features
    strings (None when missing). Time must be a finite non-negative number and
    event one of 0/1/true/false; violations raise ``ValueError`` naming the
    data row (1-based) and column. With ``require_labels=False`` the time and
    event columns may be absent.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    wanted = [name for name, _ in schema.feature_columns]
    if require_labels or schema.time_column in raw.columns or schema.event_column in raw.columns:
        wanted = [schema.time_column, schema.event_column] + wanted
    missing = [c for c in wanted if c not in raw.columns]
    if missing:
        raise ValueError(f"{path}: missing column(s) {missing}")

    out = {}
    if schema.time_column in wanted:
        times = np.empty(len(raw))
        for i, v in enumerate(raw[schema.time_column]):
            try:
                t = float(v)
            except ValueError:
                t = math.nan
            if not math.isfinite(t) or t < 0:
                raise ValueError(f"row {i + 1}, column {schema.time_column!r}: invalid time {v!r}")
            times[i] = t
        events = np.empty(len(raw), dtype=bool)
        for i, v in enumerate(raw[schema.event_column]):
            key = v.strip().lower()
            if key not in _EVENT_TOKENS:
                raise ValueError(
                    f"row {i + 1}, column {schema.event_column!r}: event must be 0/1/true/false, got {v!r}"
                )
            events[i] = _EVENT_TOKENS[key]
        out[schema.time_column] = times
        out[schema.event_column] = events
    for name, kind in schema.feature_columns:
        col = raw[name]
        if kind == "continuous":
            vals = np.empty(len(raw))
            for i, v in enumerate(col):
                if _is_missing(v):
                    vals[i] = math.nan
                    continue
                try:
                    vals[i] = float(v)
                except ValueError:
                    raise ValueError(f"row {i + 1}, column {name!r}: not a number: {v!r}") from None
            out[name] = vals
        else:
            out[name] = pd.Series([None if _is_missing(v) else v.strip() for v in col], dtype=object)
    return pd.DataFrame(out)


@dataclass(frozen=True)
class PreprocessRecipe:
    """Constants needed to turn a raw table into model features."""

    schema: ColumnSchema
    continuous: dict = field(default_factory=dict)   # name -> {"impute": m, "center": c, "scale": s}
    categorical: dict = field(default_factory=dict)  # name -> {"mode": v, "categories": [...]}
    dropped: tuple = ()

    @property
    def feature_names(self) -> list[str]:
        names = []
        for name, kind in self.schema.feature_columns:
            if kind == "continuous" and name in self.continuous:
                names.append(name)
            elif kind == "categorical":
                names.extend(f"{name}={c}" for c in self.categorical[name]["categories"])
        return names

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "continuous": {k: dict(v) for k, v in self.continuous.items()},
            "categorical": {
                k: {"mode": v["mode"], "categories": list(v["categories"])}
                for k, v in self.categorical.items()
            },
            "dropped": list(self.dropped),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessRecipe":
        return cls(
            ColumnSchema.from_dict(d["schema"]),
            {k: {kk: float(vv) for kk, vv in v.items()} for k, v in d["continuous"].items()},
            {k: {"mode": v["mode"], "categories": list(v["categories"])} for k, v in d["categorical"].items()},
            tuple(d.get("dropped", ())),
        )


def fit_preprocess(table: pd.DataFrame, schema: ColumnSchema) -> PreprocessRecipe:
    """Learn imputation, standardization and one-hot constants from ``table``."""
    if len(table) == 0:
        raise ValueError("cannot fit preprocessing on an empty table")
    continuous, categorical, dropped = {}, {}, []
    for name, kind in schema.feature_columns:
        col = table[name]
        if kind == "continuous":
            vals = np.asarray(col, dtype=np.float64)
            present = vals[~np.isnan(vals)]
            if present.size == 0:
                raise ValueError(f"column {name!r} has no non-missing values")
            mean = float(present.mean())
            filled = np.where(np.isnan(vals), mean, vals)
            center = float(filled.mean())
            scale = float(filled.std())
            if not scale > 1e-12 * max(1.0, abs(center)):
                dropped.append(name)
                continue
            continuous[name] = {"impute": mean, "center": center, "scale": scale}
        else:
            present = [v for v in col if v is not None]
            if not present:
                raise ValueError(f"column {name!r} has no non-missing values")
            counts = pd.Series(present).value_counts()
            if len(counts) > MAX_CATEGORIES:
                raise ValueError(
                    f"column {name!r} has {len(counts)} levels (> {MAX_CATEGORIES}); is it really categorical?"
                )
            categories = sorted(counts.index)
            top = counts.max()
            mode = next(c for c in categories if counts[c] == top)
            categorical[name] = {"mode": mode, "categories": categories}
    return PreprocessRecipe(schema, continuous, categorical, tuple(dropped))


def impute(table: pd.DataFrame, recipe: PreprocessRecipe) -> pd.DataFrame:
    """Fill missing values with the recipe's means and modes (no encoding)."""
    out = table.copy()
    for name, c in recipe.continuous.items():
        out[name] = np.where(np.isnan(np.asarray(out[name], dtype=float)), c["impute"], out[name])
    for name, c in recipe.categorical.items():
        out[name] = pd.Series([c["mode"] if v is None else v for v in out[name]], dtype=object, index=out.index)
    return out


def encode_features(table: pd.DataFrame, recipe: PreprocessRecipe) -> np.ndarray:
    """Imputed, standardized and one-hot encoded feature matrix."""
    missing = [n for n, _ in recipe.schema.feature_columns if n not in table.columns]
    if missing:
        raise ValueError(f"table lacks recipe column(s) {missing}")
    filled = impute(table, recipe)
    blocks = []
    for name, kind in recipe.schema.feature_columns:
        if kind == "continuous":
            if name not in recipe.continuous:
                continue
            c = recipe.continuous[name]
            vals = np.asarray(filled[name], dtype=np.float64)
            blocks.append(((vals - c["center"]) / c["scale"])[:, None])
        else:
            cats = recipe.categorical[name]["categories"]
            vals = np.asarray(filled[name], dtype=object)
            # unseen levels map to an all-zero block
            blocks.append(np.stack([vals == c for c in cats], axis=1).astype(np.float64))
    if not blocks:
        return np.zeros((len(table), 0))
    return np.hstack(blocks)


def apply_preprocess(table: pd.DataFrame, recipe: PreprocessRecipe) -> SurvivalDataset:
    schema = recipe.schema
    for col in (schema.time_column, schema.event_column):
        if col not in table.columns:
            raise ValueError(f"table lacks label column {col!r}")
    return SurvivalDataset(
        encode_features(table, recipe),
        np.asarray(table[schema.time_column], dtype=np.float64),
        np.asarray(table[schema.event_column], dtype=bool),
        tuple(recipe.feature_names),
    )


def _check_fractions(fractions):
    fractions = tuple(float(f) for f in fractions)
    if any(f <= 0 for f in fractions):
        raise ValueError(f"fractions must be positive, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions} (sum {sum(fractions)})")
    return fractions


def stratified_split_indices(events, fractions=(0.6, 0.2, 0.2), seed=0) -> list[np.ndarray]:
    """Index sets for a split stratified by the event indicator.

    Each stratum (censored / uncensored) is shuffled and cut independently.
    Every part after the first receives ``floor(fraction * stratum size)``
    rows; the rounding remainder goes to the first part.
    """
    fractions = _check_fractions(fractions)
    events = np.asarray(events, dtype=bool)
    rng = np.random.default_rng(seed)
    parts = [[] for _ in fractions]
    for stratum in (np.flatnonzero(~events), np.flatnonzero(events)):
        if stratum.size == 0:
            continue
        perm = stratum[rng.permutation(stratum.size)]
        sizes = [math.floor(f * stratum.size + 1e-9) for f in fractions[1:]]
        sizes.insert(0, stratum.size - sum(sizes))
        start = 0
        for p, size in zip(parts, sizes):
            p.append(perm[start:start + size])
            start += size
    out = [np.sort(np.concatenate(p)) if p else np.array([], dtype=np.int64) for p in parts]
    if any(p.size == 0 for p in out):
        raise ValueError(
            f"{events.size} rows are too few to give each of {len(fractions)} parts at least one row"
        )
    return out


def stratified_split(dataset: SurvivalDataset, fractions=(0.6, 0.2, 0.2), seed=0):
    """Split into parts (train, val, test by default) stratified by censoring."""
    return tuple(dataset.subset(idx) for idx in stratified_split_indices(dataset.events, fractions, seed))


def stratified_kfold_indices(events, n_folds=3, seed=0) -> list[np.ndarray]:
    """Held-out index sets of a censoring-stratified k-fold partition."""
    events = np.asarray(events, dtype=bool)
    if events.size < n_folds:
        raise ValueError(f"{events.size} rows cannot fill {n_folds} folds")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(n_folds)]
    offset = 0
    for stratum in (np.flatnonzero(~events), np.flatnonzero(events)):
        perm = stratum[rng.permutation(stratum.size)]
        for i, idx in enumerate(perm):
            folds[(i + offset) % n_folds].append(idx)
        offset = (offset + perm.size) % n_folds
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


def write_csv(dataset: SurvivalDataset, path, time_column="time", event_column="event", extra=None):
    """Write a dataset in the CSV layout ``load_csv`` reads back."""
    frame = pd.DataFrame({time_column: dataset.times, event_column: dataset.events.astype(int)})
    for j, name in enumerate(dataset.feature_names):
        frame[name] = dataset.features[:, j]
    for name, values in (extra or {}).items():
        frame[name] = values
    frame.to_csv(path, index=False, float_format="%.17g")
