"""Synthetic right-censored data with known cluster structure."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import SurvivalDataset


@dataclass(frozen=True)
class SynthSpec:
    """Generator description.

    ``time_dists`` entries are ``{"kind": "exponential", "rate": r}`` or
    ``{"kind": "weibull", "shape": a, "scale": s}``. ``censoring`` may hold an
    exponential ``"rate"`` and/or an administrative ``"cutoff"``; an empty
    dict means no censoring.
    """

    centers: tuple
    spreads: tuple
    time_dists: tuple
    weights: tuple
    n: int
    censoring: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        k = centers.shape[0]
        object.__setattr__(self, "centers", tuple(map(tuple, centers.tolist())))
        spreads = np.broadcast_to(np.asarray(self.spreads, dtype=np.float64), (k,))
        object.__setattr__(self, "spreads", tuple(spreads.tolist()))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "time_dists", tuple(dict(d) for d in self.time_dists))
        object.__setattr__(self, "censoring", dict(self.censoring))
        if not (len(self.weights) == len(self.time_dists) == k):
            raise ValueError("centers, weights and time_dists must describe the same number of clusters")
        w = np.asarray(self.weights)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        if np.any(spreads < 0):
            raise ValueError("spreads must be non-negative")
        for d in self.time_dists:
            kind = d.get("kind")
            if kind == "exponential":
                if not d.get("rate", 0) > 0:
                    raise ValueError("exponential rate must be positive")
            elif kind == "weibull":
                if not (d.get("shape", 0) > 0 and d.get("scale", 0) > 0):
                    raise ValueError("weibull shape and scale must be positive")
            else:
                raise ValueError(f"unknown time distribution {kind!r}")
        unknown = set(self.censoring) - {"rate", "cutoff"}
        if unknown:
            raise ValueError(f"unknown censoring keys {sorted(unknown)}")
        if "rate" in self.censoring and not self.censoring["rate"] > 0:
            raise ValueError("censoring rate must be positive")
        if "cutoff" in self.censoring and not self.censoring["cutoff"] >= 0:
            raise ValueError("censoring cutoff must be non-negative")
        if int(self.n) < 1:
            raise ValueError("n must be positive")

    @property
    def k(self) -> int:
        return len(self.weights)

    def to_dict(self) -> dict:
        return {
            "centers": [list(c) for c in self.centers],
            "spreads": list(self.spreads),
            "time_dists": [dict(d) for d in self.time_dists],
            "weights": list(self.weights),
            "n": int(self.n),
            "censoring": dict(self.censoring),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        try:
            return cls(d["centers"], d["spreads"], d["time_dists"], d["weights"], int(d["n"]),
                       d.get("censoring", {}), int(d.get("seed", 0)))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed synth spec: {exc!r}") from exc

    @classmethod
    def from_json(cls, text: str) -> "SynthSpec":
        return cls.from_dict(json.loads(text))


def _draw_times(dist, size, rng):
    if dist["kind"] == "exponential":
        return rng.exponential(1.0 / dist["rate"], size)
    return dist["scale"] * rng.weibull(dist["shape"], size)


def generate(spec: SynthSpec):
    """Draw ``(dataset, true_labels)``; labels are 0-based cluster indices."""
    rng = np.random.default_rng(spec.seed)
    n = int(spec.n)
    labels = rng.choice(spec.k, size=n, p=np.asarray(spec.weights))
    centers = np.asarray(spec.centers)
    spreads = np.asarray(spec.spreads)
    features = centers[labels] + spreads[labels, None] * rng.standard_normal((n, centers.shape[1]))
    event_times = np.empty(n)
    for c, dist in enumerate(spec.time_dists):
        members = labels == c
        event_times[members] = _draw_times(dist, int(members.sum()), rng)
    censor_times = np.full(n, np.inf)
    if "rate" in spec.censoring:
        censor_times = rng.exponential(1.0 / spec.censoring["rate"], n)
    if "cutoff" in spec.censoring:
        censor_times = np.minimum(censor_times, spec.censoring["cutoff"])
    times = np.minimum(event_times, censor_times)
    events = event_times <= censor_times
    names = tuple(f"x{j + 1}" for j in range(centers.shape[1]))
    return SurvivalDataset(features, times, events, names), labels
