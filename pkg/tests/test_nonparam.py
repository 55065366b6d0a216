from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from survmixclust.nonparam import (
    StepSurvivalFunction,
    kaplan_meier,
    km_mass,
    plugin_bandwidth,
    smoothed_density,
    survival_at,
)


def empirical_survival(times, t):
    return sum(1 for x in times if x > t) / len(times)


def test_km_hand_example():
    # n=3: t=1 event (3 at risk) -> 2/3; t=2 censored; t=3 event (1 at risk) -> 0
    sf = kaplan_meier([1, 2, 3], [1, 0, 1])
    np.testing.assert_array_equal(sf.jump_times, [1.0, 3.0])
    assert survival_at(sf, 1) == pytest.approx(2 / 3, abs=1e-15)
    assert survival_at(sf, 2) == pytest.approx(2 / 3, abs=1e-15)
    assert survival_at(sf, 3) == 0.0


def test_km_all_censored_is_flat():
    sf = kaplan_meier([1, 2, 5], [0, 0, 0])
    assert sf.jump_times.size == 0
    assert np.all(survival_at(sf, np.array([0, 1, 3, 100])) == 1.0)


def test_km_ties_events_before_censoring():
    # at t=2 one event and one censoring: both in the risk set (4 at risk)
    sf = kaplan_meier([1, 2, 2, 3, 4], [1, 1, 0, 1, 0])
    assert survival_at(sf, 2) == pytest.approx((4 / 5) * (3 / 4))
    assert survival_at(sf, 3) == pytest.approx((4 / 5) * (3 / 4) * (1 / 2))


def test_km_empty_raises():
    with pytest.raises(ValueError):
        kaplan_meier([], [])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=1, max_size=50))
def test_km_uncensored_matches_empirical(times):
    sf = kaplan_meier(times, np.ones(len(times)))
    for t in sorted(set(times)) + [-0.5, 0.5, 25]:
        exact = Fraction(sum(1 for x in times if x > t), len(times))
        assert abs(survival_at(sf, max(t, 0)) - float(exact)) <= 1e-12 or t < 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 100, allow_nan=False), st.booleans()), min_size=1, max_size=60))
def test_km_nonincreasing_and_mass_balance(pairs):
    times, events = zip(*pairs)
    sf = kaplan_meier(times, events)
    assert np.all(np.diff(sf.values) <= 0)
    assert np.all((sf.values >= 0) & (sf.values <= 1))
    _, masses = km_mass(sf)
    assert np.all(masses >= 0)
    assert masses.sum() + sf.final_value == pytest.approx(1.0, abs=1e-12)


def test_survival_at_edges():
    sf = StepSurvivalFunction([1.0, 2.0], [0.7, 0.4])
    assert survival_at(sf, 0.0) == 1.0
    assert survival_at(sf, 1.0) == 0.7
    assert survival_at(sf, 1.999) == 0.7
    assert survival_at(sf, 50.0) == 0.4


def test_km_mass_examples():
    times, masses = km_mass(kaplan_meier([1, 2, 3], [1, 0, 1]))
    np.testing.assert_allclose(times, [1, 3])
    np.testing.assert_allclose(masses, [1 / 3, 2 / 3], atol=1e-15)
    assert km_mass(kaplan_meier([1, 2], [0, 0]))[1].size == 0
    _, m = km_mass(kaplan_meier([3, 1, 4, 2, 5], np.ones(5)))
    np.testing.assert_allclose(m, 0.2, atol=1e-15)


def test_plugin_bandwidth_formula(rng):
    x = rng.standard_normal(100)
    sd = np.std(x, ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    expected = 1.06 * min(sd, iqr / 1.34) * 100 ** (-0.2)
    assert plugin_bandwidth(x) == pytest.approx(expected, rel=1e-12)
    # unit-scale sample: about 1.06 * 100**-0.2
    assert plugin_bandwidth(x) == pytest.approx(0.422, abs=0.06)


def test_plugin_bandwidth_scale_equivariant(rng):
    x = rng.exponential(size=57)
    assert plugin_bandwidth(3.5 * x) == pytest.approx(3.5 * plugin_bandwidth(x), rel=1e-12)


def test_plugin_bandwidth_needs_two_distinct():
    with pytest.raises(ValueError, match="bandwidth"):
        plugin_bandwidth([2.0, 2.0])


def test_density_peak_and_empty():
    sf = StepSurvivalFunction([5.0], [0.0])
    d = smoothed_density(sf, 0.7, floor=1e-9)
    assert d(5.0) == pytest.approx(1e-9 + 1 / (0.7 * np.sqrt(2 * np.pi)), rel=1e-14)
    flat = smoothed_density(StepSurvivalFunction([], []), 0.7, floor=1e-9)
    np.testing.assert_array_equal(flat(np.array([0.0, 3.0, 1e6])), 1e-9)


def test_density_direct_kernel_sum():
    sf = kaplan_meier([1, 2, 3], [1, 0, 1])
    d = smoothed_density(sf, 0.5)

    def k(u, h):
        return np.exp(-0.5 * (u / h) ** 2) / (h * np.sqrt(2 * np.pi))

    expected = d.floor + (1 / 3) * k(0.0, 0.5) + (2 / 3) * k(2.0, 0.5)
    assert d(1.0) == pytest.approx(expected, rel=1e-13)


def test_density_positive_and_integrates_to_km_mass(rng):
    t = rng.exponential(2.0, 80)
    e = rng.random(80) < 0.7
    sf = kaplan_meier(t, e)
    h = plugin_bandwidth(t[e])
    d = smoothed_density(sf, h)
    grid = np.linspace(0, 10 * t.max(), 2000)
    vals = d(grid)
    assert np.all(vals > 0) and np.all(np.isfinite(vals))
    lo, hi = t.min() - 10 * h, t.max() + 10 * h
    pts = list(sf.jump_times)
    integral, _ = quad(lambda u: d(u) - d.floor, lo, hi, points=pts[:50], limit=500)
    assert integral == pytest.approx(km_mass(sf)[1].sum(), abs=1e-3)


def test_sf_json_roundtrip():
    sf = kaplan_meier([1, 2, 3, 3, 9], [1, 1, 0, 1, 0])
    back = StepSurvivalFunction.from_dict(sf.to_dict())
    np.testing.assert_array_equal(back.jump_times, sf.jump_times)
    np.testing.assert_array_equal(back.values, sf.values)
    assert set(sf.to_dict()) == {"times", "values"}
