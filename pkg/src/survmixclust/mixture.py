"""Mixture of Kaplan-Meier experts gated by multinomial logistic regression.

Training is hard-assignment (classification) EM:

1. labels drawn uniformly at random from ``0..k-1``;
2. M-step: per-cluster KM curve and kernel-smoothed density (bandwidth fixed
   before the first iteration), gate refit on the current labels;
3. E-step: each point moves to ``argmax_k L_k(t, d) * tau_k(x)``, where
   ``L_k`` is the cluster density at ``t`` for events and the cluster survival
   at ``t`` for censored points;

repeating 2-3 until fewer than ``churn_tol * n`` labels change.

Cluster labels are 0-based throughout this module.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .classifier import SoftmaxGate, fit_gate
from .data import SurvivalDataset
from .nonparam import (
    DEFAULT_FLOOR,
    SmoothedDensity,
    StepSurvivalFunction,
    kaplan_meier,
    plugin_bandwidth,
    smoothed_density,
)

FORMAT_VERSION = 1
DEVIATION_FLAGS = (
    "gate_has_unpenalized_intercept",
    "gate_l2_penalty",
    "density_is_gaussian_smoothed_km",
    "small_cluster_repair",
    "outlier_weight_renormalizes_gate",
)


@dataclass(frozen=True, eq=False)
class ClusterExpert:
    survival: StepSurvivalFunction
    density: SmoothedDensity
    member_count: int = 0

    def point_likelihood(self, t, d):
        return point_likelihood(self, t, d)


def point_likelihood(expert: ClusterExpert, t, d):
    """Density at ``t`` for events, survival at ``t`` (floored) for censored points."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    d_arr = np.broadcast_to(np.atleast_1d(np.asarray(d, dtype=bool)), t_arr.shape)
    out = np.empty_like(t_arr)
    if d_arr.any():
        out[d_arr] = expert.density.evaluate(t_arr[d_arr])
    if (~d_arr).any():
        out[~d_arr] = np.maximum(expert.survival(t_arr[~d_arr]), expert.density.floor)
    return float(out[0]) if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class FitConfig:
    k: int = 2
    max_iters: int = 100
    churn_tol: float = 1e-3
    seed: int = 0
    n_restarts: int = 5
    l2_penalty: float = 1e-4
    gate_max_iters: int = 500
    gate_tol: float = 1e-6
    density_floor: float = DEFAULT_FLOOR
    min_cluster_size: int | None = None
    bandwidth: float | None = None
    outlier_weight: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iters < 1 or self.n_restarts < 1:
            raise ValueError("max_iters and n_restarts must be positive")
        if not 0 <= self.outlier_weight < 1:
            raise ValueError("outlier_weight must lie in [0, 1)")
        if self.churn_tol < 0 or self.density_floor <= 0:
            raise ValueError("churn_tol must be >= 0 and density_floor > 0")

    def resolved_min_cluster_size(self, n: int) -> int:
        if self.min_cluster_size is not None:
            return int(self.min_cluster_size)
        return max(5, n // (10 * self.k))


@dataclass
class RestartTrace:
    restart: int
    init_log_likelihood: float = math.nan
    log_likelihood: list = field(default_factory=list)
    churn: list = field(default_factory=list)
    converged: bool = False
    error: str | None = None

    @property
    def final_log_likelihood(self) -> float:
        return self.log_likelihood[-1] if self.log_likelihood else self.init_log_likelihood


@dataclass(frozen=True, eq=False)
class SurvMixModel:
    experts: tuple
    gate: SoftmaxGate
    bandwidth: float
    outlier_weight: float = 0.0
    region_start: float = 0.0
    region_volume: float = 1.0
    time_max: float = 1.0
    diagnostics: tuple = ()
    selected_restart: int = 0
    labels: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "experts", tuple(self.experts))
        if len(self.experts) != self.gate.k:
            raise ValueError(f"{len(self.experts)} experts but gate has {self.gate.k} rows")
        if not self.region_volume > 0:
            raise ValueError("region_volume must be positive")

    @property
    def k(self) -> int:
        return len(self.experts)

    @property
    def density_floor(self) -> float:
        return self.experts[0].density.floor

    # Thin method wrappers over the module-level operations.
    def e_step(self, dataset):
        return e_step(self, dataset)

    def responsibilities(self, dataset):
        return responsibilities(self, dataset)

    def cluster_uncertainty(self, dataset):
        return cluster_uncertainty(self, dataset)

    def predict_survival(self, X, time_grid):
        return predict_survival(self, X, time_grid)

    def predict_cluster(self, X):
        return predict_cluster(self, X)

    def observed_log_likelihood(self, dataset):
        return observed_log_likelihood(self, dataset)

    def outlier_survival(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.clip(1.0 - (t - self.region_start) / self.region_volume, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "format": "survmixclust-model",
            "version": FORMAT_VERSION,
            "model_type": "survmixclust",
            "k": self.k,
            "n_features": self.gate.n_features,
            "gate": self.gate.to_dict(),
            "experts": [
                {"survival": e.survival.to_dict(), "member_count": int(e.member_count)}
                for e in self.experts
            ],
            "bandwidth": self.bandwidth,
            "density_floor": self.density_floor,
            "outlier_weight": self.outlier_weight,
            "outlier_region": {"start": self.region_start, "volume": self.region_volume},
            "time_max": self.time_max,
            "deviation_flags": list(DEVIATION_FLAGS),
            "selected_restart": self.selected_restart,
            "diagnostics": [asdict(d) for d in self.diagnostics],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurvMixModel":
        if d.get("model_type") != "survmixclust":
            raise ValueError(f"not a survmixclust model: {d.get('model_type')!r}")
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        floor = d["density_floor"]
        experts = []
        for e in d["experts"]:
            sf = StepSurvivalFunction.from_dict(e["survival"])
            experts.append(ClusterExpert(sf, smoothed_density(sf, d["bandwidth"], floor), e["member_count"]))
        return cls(
            tuple(experts),
            SoftmaxGate.from_dict(d["gate"]),
            d["bandwidth"],
            d["outlier_weight"],
            d["outlier_region"]["start"],
            d["outlier_region"]["volume"],
            d["time_max"],
            tuple(RestartTrace(**t) for t in d.get("diagnostics", [])),
            d.get("selected_restart", 0),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")


def init_assignments(n, k, seed=0) -> np.ndarray:
    """Uniform i.i.d. labels in ``0..k-1`` with every label present."""
    if n < k:
        raise ValueError(f"cannot assign {n} points to {k} non-empty clusters")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        labels = rng.integers(0, k, size=n)
        if np.unique(labels).size == k:
            return labels
    labels[:k] = np.arange(k)  # round-robin patch
    return labels


def repair_clusters(labels, k, min_cluster_size, scores=None, seed=0) -> np.ndarray:
    """Refill clusters smaller than ``min_cluster_size``.

    Points are taken from the currently largest cluster, cheapest first: the
    cost of moving point ``i`` from cluster ``a`` to ``b`` is
    ``scores[i, a] - scores[i, b]`` (log-score margin). Without ``scores`` the
    order is a random permutation drawn from ``seed``.
    """
    labels = np.array(labels, dtype=np.int64)
    n = labels.size
    if n < k * min_cluster_size:
        raise ValueError(f"{n} points cannot give {k} clusters {min_cluster_size} members each")
    counts = np.bincount(labels, minlength=k)
    if counts.min() >= min_cluster_size:
        return labels
    tiebreak = None if scores is not None else np.random.default_rng(seed).random(n)
    while True:
        short = np.flatnonzero(counts < min_cluster_size)
        if short.size == 0:
            return labels
        target = short[0]
        donor = int(np.argmax(counts))
        members = np.flatnonzero(labels == donor)
        if scores is not None:
            cost = scores[members, donor] - scores[members, target]
        else:
            cost = tiebreak[members]
        need = min(min_cluster_size - counts[target], counts[donor] - min_cluster_size)
        moved = members[np.lexsort((members, cost))[:need]]
        labels[moved] = target
        counts[donor] -= need
        counts[target] += need


def _log_likelihood_matrix(experts, times, events) -> np.ndarray:
    return np.log(np.column_stack([point_likelihood(e, times, events) for e in experts]))


def log_scores(model: SurvMixModel, dataset: SurvivalDataset) -> np.ndarray:
    """``log L_k(t_n, d_n) + log tau_k(x_n)``, shape ``(n, k)``."""
    return _log_likelihood_matrix(model.experts, dataset.times, dataset.events) + model.gate.log_proportions(
        dataset.features
    )


def e_step(model: SurvMixModel, dataset: SurvivalDataset) -> np.ndarray:
    """Hard labels: argmax over clusters of likelihood times gate weight, ties to the lowest index."""
    return np.argmax(log_scores(model, dataset), axis=1)


@dataclass(frozen=True, eq=False)
class Responsibilities:
    matrix: np.ndarray

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.matrix, axis=1)


def responsibilities(model: SurvMixModel, dataset: SurvivalDataset) -> Responsibilities:
    """Posterior cluster probabilities given features and the (time, event) label."""
    s = log_scores(model, dataset)
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return Responsibilities(e / e.sum(axis=1, keepdims=True))


def cluster_uncertainty(model: SurvMixModel, dataset: SurvivalDataset) -> np.ndarray:
    return 1.0 - responsibilities(model, dataset).matrix.max(axis=1)


def m_step(dataset: SurvivalDataset, labels, k, bandwidth, l2_penalty=1e-4, gate_max_iters=500,
           gate_tol=1e-6, density_floor=DEFAULT_FLOOR) -> SurvMixModel:
    """Per-cluster KM and smoothed density, then the gate refit on the labels."""
    labels = np.asarray(labels, dtype=np.int64)
    experts = []
    for c in range(k):
        members = labels == c
        if not members.any():
            raise ValueError(f"cluster {c} is empty")
        sf = kaplan_meier(dataset.times[members], dataset.events[members])
        experts.append(ClusterExpert(sf, smoothed_density(sf, bandwidth, density_floor), int(members.sum())))
    gate = fit_gate(dataset.features, labels, k, l2_penalty, gate_max_iters, gate_tol)
    return SurvMixModel(tuple(experts), gate, float(bandwidth), time_max=float(dataset.times.max()))


def observed_log_likelihood(model: SurvMixModel, dataset: SurvivalDataset) -> float:
    """``sum_n log sum_k tau_k(x_n) L_k(t_n, d_n)``, plus the outlier term when enabled."""
    lse = logsumexp(log_scores(model, dataset), axis=1)
    if model.outlier_weight > 0:
        w = model.outlier_weight
        outlier = np.where(
            dataset.events,
            1.0 / model.region_volume,
            np.maximum(model.outlier_survival(dataset.times), model.density_floor),
        )
        lse = np.logaddexp(math.log1p(-w) + lse, math.log(w) + np.log(outlier))
    return float(np.sum(lse))


def predict_survival(model: SurvMixModel, X, time_grid) -> np.ndarray:
    """Gate-weighted mixture of the expert curves on ``time_grid``.

    Returns ``(n, len(time_grid))``, or a single curve for a 1-D ``X``.
    """
    grid = np.asarray(time_grid, dtype=np.float64).reshape(-1)
    weights = np.atleast_2d(model.gate.predict_proportions(X))
    # mix event probabilities so S(t)=1 holds exactly wherever every curve is 1
    failed = np.vstack([1.0 - e.survival(grid) for e in model.experts])
    out = weights @ failed
    if model.outlier_weight > 0:
        out = (1.0 - model.outlier_weight) * out + model.outlier_weight * (1.0 - model.outlier_survival(grid))
    out = np.clip(1.0 - out, 0.0, 1.0)
    return out[0] if np.ndim(X) == 1 else out


def predict_cluster(model: SurvMixModel, X):
    """Label-free assignment: argmax of the gate proportions."""
    p = model.gate.predict_proportions(X)
    return np.argmax(p, axis=-1) if np.ndim(p) == 2 else int(np.argmax(p))


def _run_em(dataset, config, k, bandwidth, min_size, rng, restart):
    trace = RestartTrace(restart)
    gate_args = dict(
        l2_penalty=config.l2_penalty, gate_max_iters=config.gate_max_iters,
        gate_tol=config.gate_tol, density_floor=config.density_floor,
    )
    labels = init_assignments(dataset.n, k, rng)
    labels = repair_clusters(labels, k, min_size, seed=rng)
    state = m_step(dataset, labels, k, bandwidth, **gate_args)
    state = _with_outlier(state, config, dataset)
    trace.init_log_likelihood = observed_log_likelihood(state, dataset)
    for _ in range(config.max_iters):
        scores = log_scores(state, dataset)
        new = repair_clusters(np.argmax(scores, axis=1), k, min_size, scores=scores)
        churn = int(np.count_nonzero(new != labels))
        labels = new
        state = _with_outlier(m_step(dataset, labels, k, bandwidth, **gate_args), config, dataset)
        trace.churn.append(churn)
        trace.log_likelihood.append(observed_log_likelihood(state, dataset))
        if churn < config.churn_tol * dataset.n:
            trace.converged = True
            break
    return replace(state, labels=labels), trace


def _with_outlier(state, config, dataset):
    lo, hi = float(dataset.times.min()), float(dataset.times.max())
    return replace(
        state,
        outlier_weight=config.outlier_weight,
        region_start=lo,
        region_volume=(hi - lo) if hi > lo else 1.0,
    )


def fit(dataset: SurvivalDataset, config: FitConfig = FitConfig()) -> SurvMixModel:
    """Train with several EM restarts and keep the highest observed log-likelihood.

    Restart ``r`` draws from the ``r``-th child of ``SeedSequence(config.seed)``,
    so results do not depend on execution order.
    """
    k = config.k
    min_size = config.resolved_min_cluster_size(dataset.n)
    if dataset.n < k * min_size:
        raise ValueError(f"n={dataset.n} is below k * min_cluster_size = {k * min_size}")
    bandwidth = config.bandwidth
    if bandwidth is None:
        bandwidth = plugin_bandwidth(dataset.times[dataset.events])

    traces, best, best_ll = [], None, -math.inf
    for r, child in enumerate(np.random.SeedSequence(config.seed).spawn(config.n_restarts)):
        try:
            model, trace = _run_em(dataset, config, k, bandwidth, min_size, np.random.default_rng(child), r)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            traces.append(RestartTrace(r, error=f"{type(exc).__name__}: {exc}"))
            continue
        traces.append(trace)
        if trace.final_log_likelihood > best_ll:
            best, best_ll = model, trace.final_log_likelihood
            best = replace(best, selected_restart=r)
    if best is None:
        causes = "; ".join(f"restart {t.restart}: {t.error}" for t in traces)
        raise RuntimeError(f"all {config.n_restarts} EM restarts failed: {causes}")
    return replace(best, diagnostics=tuple(traces))


def load_model(path) -> SurvMixModel:
    with open(path, encoding="utf-8") as fh:
        return SurvMixModel.from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class KSelection:
    best_k: int
    report: list
    model: SurvMixModel

    def mean_c_index(self) -> dict:
        ks = sorted({r["k"] for r in self.report})
        return {k: float(np.mean([r["c_index"] for r in self.report if r["k"] == k])) for k in ks}


def select_k(dataset: SurvivalDataset, k_grid, config: FitConfig = FitConfig(), n_folds=3) -> KSelection:
    """Pick k by ``n_folds``-fold CV on held-out td-C-index, then refit on all of ``dataset``."""
    from .protocol import best_k, cross_validate_k

    k_grid = sorted({int(k) for k in k_grid})
    if not k_grid:
        raise ValueError("k_grid is empty")
    smallest_train = dataset.n - -(-dataset.n // n_folds)
    k_max = k_grid[-1]
    need = k_max * replace(config, k=k_max).resolved_min_cluster_size(smallest_train)
    if smallest_train < need:
        raise ValueError(
            f"CV training folds of ~{smallest_train} rows are too small for k={k_max} (need {need})"
        )
    rows = cross_validate_k(
        dataset, k_grid, lambda train, k: fit(train, replace(config, k=k)), n_folds, config.seed
    )
    k = best_k(rows)
    return KSelection(k, rows, fit(dataset, replace(config, k=k)))
