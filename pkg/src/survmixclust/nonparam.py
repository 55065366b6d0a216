"""Kaplan-Meier survival functions and kernel-smoothed event-time densities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import gaussian_kernel_sum

DEFAULT_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class StepSurvivalFunction:
    """Right-continuous step function equal to 1 before the first jump.

    ``values[j]`` is S(t) for ``jump_times[j] <= t < jump_times[j + 1]``; past
    the last jump the last value is carried forward.
    """

    jump_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        jt = np.array(self.jump_times, dtype=np.float64).reshape(-1)
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if jt.shape != vals.shape:
            raise ValueError("jump_times and values must have equal length")
        if jt.size > 1 and np.any(np.diff(jt) <= 0):
            raise ValueError("jump_times must be strictly increasing")
        jt.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "values", vals)

    def __call__(self, t):
        return survival_at(self, t)

    @property
    def final_value(self) -> float:
        return float(self.values[-1]) if self.values.size else 1.0

    def to_dict(self) -> dict:
        return {"times": self.jump_times.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "StepSurvivalFunction":
        return cls(d["times"], d["values"])


def kaplan_meier(times, events) -> StepSurvivalFunction:
    """Product-limit estimate of the survival function.

    At a time shared by events and censorings the events are processed first,
    so the censored subjects still count in that time's risk set.
    """
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    events = np.asarray(events, dtype=bool).reshape(-1)
    if times.size == 0:
        raise ValueError("kaplan_meier needs at least one observation")
    if times.shape != events.shape:
        raise ValueError("times and events must have equal length")
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise ValueError("times must be finite and non-negative")

    uniq, inverse = np.unique(times, return_inverse=True)
    total = np.bincount(inverse, minlength=uniq.size)
    deaths = np.bincount(inverse, weights=events, minlength=uniq.size).astype(np.int64)
    at_risk = times.size - np.concatenate(([0], np.cumsum(total)[:-1]))
    has_event = deaths > 0
    factors = (at_risk[has_event] - deaths[has_event]) / at_risk[has_event]
    return StepSurvivalFunction(uniq[has_event], np.cumprod(factors))


def survival_at(sf: StepSurvivalFunction, t):
    """Evaluate ``sf`` at scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=np.float64)
    idx = np.searchsorted(sf.jump_times, t_arr, side="right") - 1
    padded = np.concatenate(([1.0], sf.values))
    out = padded[idx + 1]
    return float(out) if np.ndim(out) == 0 else out


def km_mass(sf: StepSurvivalFunction):
    """Probability mass at each jump: ``S(t_j-) - S(t_j)``.

    Returns ``(times, masses)``; masses sum to ``1 - sf.final_value``.
    """
    prev = np.concatenate(([1.0], sf.values[:-1]))
    return sf.jump_times.copy(), prev - sf.values


def plugin_bandwidth(uncensored_times) -> float:
    """Normal-reference plug-in bandwidth ``1.06 * min(sd, IQR/1.34) * n**(-1/5)``.

    When the IQR is zero but the spread is not, the standard deviation alone
    is used so the result stays positive.
    """
    x = np.asarray(uncensored_times, dtype=np.float64).reshape(-1)
    if np.unique(x).size < 2:
        raise ValueError(
            "plug-in bandwidth needs at least 2 distinct uncensored times; supply a bandwidth explicitly"
        )
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    return 1.06 * spread * x.size ** (-0.2)


@dataclass(frozen=True, eq=False)
class SmoothedDensity:
    """Gaussian-kernel smoothing of KM probability masses, plus a positive floor."""

    mass_times: np.ndarray
    masses: np.ndarray
    bandwidth: float
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.floor > 0:
            raise ValueError(f"floor must be positive, got {self.floor}")
        mt = np.array(self.mass_times, dtype=np.float64).reshape(-1)
        m = np.array(self.masses, dtype=np.float64).reshape(-1)
        mt.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "mass_times", mt)
        object.__setattr__(self, "masses", m)

    def __call__(self, t):
        return self.evaluate(t)

    def evaluate(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = self.floor + gaussian_kernel_sum(
            np.ascontiguousarray(t_arr.reshape(-1)), self.mass_times, self.masses, float(self.bandwidth)
        )
        out = out.reshape(t_arr.shape)
        return float(out[0]) if np.ndim(t) == 0 else out


def smoothed_density(sf: StepSurvivalFunction, bandwidth: float, floor: float = DEFAULT_FLOOR) -> SmoothedDensity:
    times, masses = km_mass(sf)
    return SmoothedDensity(times, masses, float(bandwidth), float(floor))
