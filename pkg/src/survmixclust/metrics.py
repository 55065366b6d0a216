"""Time-dependent concordance and the K-sample log-rank test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .kernels import concordance_counts


@dataclass(frozen=True, eq=False)
class CurvePredictions:
    """Per-subject survival curves on a shared non-decreasing time grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64).reshape(-1)
        values = np.ascontiguousarray(np.atleast_2d(np.asarray(self.values, dtype=np.float64)))
        if values.shape[1] != grid.size:
            raise ValueError(f"values have {values.shape[1]} columns for a grid of {grid.size}")
        if grid.size > 1 and np.any(np.diff(grid) < 0):
            raise ValueError("grid must be non-decreasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def column_of(self, t) -> np.ndarray:
        """Grid column holding the step value at ``t`` (-1 before the grid)."""
        return np.searchsorted(self.grid, np.asarray(t, dtype=np.float64), side="right") - 1


def td_c_index(pred: CurvePredictions, times, events) -> float:
    """Time-dependent concordance index.

    A pair (i, j) is comparable when subject i has an event and
    ``t_i < t_j``, or ``t_i == t_j`` with j censored. It is concordant when
    ``S_i(t_i) < S_j(t_i)``; equal predictions count one half.
    """
    times = np.ascontiguousarray(times, dtype=np.float64).reshape(-1)
    events = np.ascontiguousarray(events, dtype=np.uint8).reshape(-1)
    if pred.values.shape[0] != times.size or events.size != times.size:
        raise ValueError("predictions, times and events disagree in length")
    if times.size < 2:
        raise ValueError("td_c_index needs at least 2 subjects")
    cols = np.ascontiguousarray(pred.column_of(times), dtype=np.int64)
    twice_concordant, comparable = concordance_counts(pred.values, cols, times, events)
    if comparable == 0:
        raise ValueError("no comparable pairs: the concordance index is undefined")
    return twice_concordant / (2.0 * comparable)


@dataclass(frozen=True)
class LogrankResult:
    statistic: float
    df: int
    p_value: float

    def to_dict(self) -> dict:
        return {"stat": self.statistic, "df": self.df, "p": self.p_value}


def logrank_test(groups, times, events) -> LogrankResult:
    """K-sample log-rank test of equal hazards across ``groups``."""
    groups = np.asarray(groups).reshape(-1)
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    events = np.asarray(events, dtype=bool).reshape(-1)
    if not groups.size == times.size == events.size:
        raise ValueError("groups, times and events disagree in length")
    labels, g = np.unique(groups, return_inverse=True)
    n_groups = labels.size
    if n_groups < 2:
        raise ValueError("log-rank test needs at least 2 non-empty groups")
    if not events.any():
        raise ValueError("log-rank test needs at least one event")

    uniq, t_idx = np.unique(times, return_inverse=True)
    n_t = uniq.size
    # per (time, group): subjects leaving the risk set, and events
    leaving = np.zeros((n_t, n_groups))
    np.add.at(leaving, (t_idx, g), 1.0)
    deaths = np.zeros((n_t, n_groups))
    np.add.at(deaths, (t_idx[events], g[events]), 1.0)
    at_risk = leaving[::-1].cumsum(axis=0)[::-1]

    keep = deaths.sum(axis=1) > 0
    at_risk, deaths = at_risk[keep], deaths[keep]
    n = at_risk.sum(axis=1)
    d = deaths.sum(axis=1)
    share = at_risk / n[:, None]
    observed_minus_expected = (deaths - d[:, None] * share).sum(axis=0)

    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(n > 1, d * (n - d) / (n - 1), 0.0)
    cov = np.einsum("t,tg,th->gh", scale, share, -share)
    cov[np.diag_indices(n_groups)] += (scale[:, None] * share).sum(axis=0)

    u = observed_minus_expected[:-1]
    v = cov[:-1, :-1]
    stat = float(u @ np.linalg.pinv(v) @ u)
    stat = max(stat, 0.0)
    df = n_groups - 1
    return LogrankResult(stat, df, float(chi2.sf(stat, df)))
