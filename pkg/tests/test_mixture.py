import itertools
import json
import math

import numpy as np
import pytest

from survmixclust.classifier import SoftmaxGate
from survmixclust.data import SurvivalDataset
from survmixclust.mixture import (
    ClusterExpert,
    FitConfig,
    SurvMixModel,
    cluster_uncertainty,
    e_step,
    fit,
    init_assignments,
    m_step,
    observed_log_likelihood,
    point_likelihood,
    predict_cluster,
    predict_survival,
    repair_clusters,
    responsibilities,
)
from survmixclust.nonparam import StepSurvivalFunction, kaplan_meier, smoothed_density, survival_at


def constant_gate(proportions, n_features=1):
    coef = np.zeros((len(proportions), n_features + 1))
    coef[:, -1] = np.log(proportions)
    return SoftmaxGate(coef)


def expert(times, events, bandwidth=0.5):
    sf = kaplan_meier(times, events)
    return ClusterExpert(sf, smoothed_density(sf, bandwidth), len(times))


def toy_model(proportions=(0.5, 0.5)):
    experts = (expert([1, 2, 3], [1, 1, 1]), expert([8, 9, 10], [1, 1, 0]))
    return SurvMixModel(experts, constant_gate(proportions), 0.5)


def toy_data(times, events):
    n = len(times)
    return SurvivalDataset(np.zeros((n, 1)), np.asarray(times, float), np.asarray(events, bool))


def test_point_likelihood_branches():
    e = expert([1, 2, 3], [1, 0, 1])
    assert point_likelihood(e, 1.0, True) == pytest.approx(e.density(1.0))
    assert point_likelihood(e, 1.5, False) == pytest.approx(2 / 3)
    assert point_likelihood(e, 10.0, False) == e.density.floor


def test_e_step_and_responsibilities_examples():
    model = toy_model()
    data = toy_data([2.0, 9.0, 5.0], [1, 1, 0])
    labels = e_step(model, data)
    np.testing.assert_array_equal(labels, [0, 1, 1])
    r = responsibilities(model, data)
    np.testing.assert_allclose(r.matrix.sum(1), 1.0)
    np.testing.assert_array_equal(r.labels, labels)
    # censored at 5: cluster 0 survival is floored, cluster 1 survival is 1
    assert r.matrix[2, 1] == pytest.approx(1.0)


def test_e_step_ties_go_to_lowest_index():
    e = expert([1, 2, 3], [1, 1, 1])
    model = SurvMixModel((e, e), constant_gate((0.5, 0.5)), 0.5)
    np.testing.assert_array_equal(e_step(model, toy_data([1.0, 2.0], [1, 0])), [0, 0])
    np.testing.assert_allclose(cluster_uncertainty(model, toy_data([1.0], [1])), [0.5])


def test_gate_weight_shifts_assignment():
    e1 = ClusterExpert(StepSurvivalFunction([], []), smoothed_density(StepSurvivalFunction([2.0], [0.0]), 1.0))
    e2 = ClusterExpert(StepSurvivalFunction([], []), smoothed_density(StepSurvivalFunction([3.0], [0.0]), 1.0))
    data = toy_data([2.4], [1])
    # equal gate: closer expert (centre 2) wins
    assert e_step(SurvMixModel((e1, e2), constant_gate((0.5, 0.5)), 1.0), data)[0] == 0
    assert e_step(SurvMixModel((e1, e2), constant_gate((0.1, 0.9)), 1.0), data)[0] == 1


def test_observed_log_likelihood_brute_force():
    model = toy_model((0.3, 0.7))
    times, events = [1.5, 9.0, 4.0, 12.0], [1, 1, 0, 0]
    data = toy_data(times, events)
    expected = 0.0
    for t, d in zip(times, events):
        total = 0.0
        for w, e in zip((0.3, 0.7), model.experts):
            lik = e.density(t) if d else max(survival_at(e.survival, t), e.density.floor)
            total += w * lik
        expected += math.log(total)
    assert observed_log_likelihood(model, data) == pytest.approx(expected, rel=1e-12)


def test_outlier_term_in_likelihood_and_survival():
    model = toy_model()
    data = toy_data([2.0, 9.0], [1, 0])
    base_terms = np.exp(
        [observed_log_likelihood(model, data.subset([0])), observed_log_likelihood(model, data.subset([1]))]
    )
    w, start, vol = 0.1, 1.0, 10.0
    out = SurvMixModel(model.experts, model.gate, 0.5, w, start, vol)
    g0 = np.array([1 / vol, 1 - (9.0 - start) / vol])
    expected = np.sum(np.log((1 - w) * base_terms + w * g0))
    assert observed_log_likelihood(out, data) == pytest.approx(expected, rel=1e-12)
    s = predict_survival(out, np.zeros(1), [0.0, 1.0, 6.0, 11.0, 50.0])
    # past the region only expert 2's censored tail (1/3) remains
    assert s[0] == 1.0
    assert s[-1] == pytest.approx((1 - w) * 0.5 * (1 / 3))


def test_predict_survival_mixture_example():
    experts = (
        ClusterExpert(StepSurvivalFunction([1.0], [1.0]), None),
        ClusterExpert(StepSurvivalFunction([1.0], [0.2]), None),
    )
    model = SurvMixModel(experts, constant_gate((0.25, 0.75)), 1.0)
    assert predict_survival(model, np.zeros(1), [2.0])[0] == pytest.approx(0.25 * 1.0 + 0.75 * 0.2)
    assert predict_cluster(model, np.zeros(1)) == 1


def test_init_assignments_all_present():
    for seed in range(20):
        labels = init_assignments(7, 7, seed)
        assert sorted(labels.tolist()) == list(range(7))
    with pytest.raises(ValueError):
        init_assignments(2, 3)


def test_init_assignments_uniform_and_reproducible():
    freq = np.bincount(init_assignments(100_000, 4, seed=0), minlength=4) / 100_000
    assert np.max(np.abs(freq - 0.25)) < 0.01
    a, b = init_assignments(6, 2, seed=42), init_assignments(6, 2, seed=42)
    np.testing.assert_array_equal(a, b)
    assert set(a.tolist()) == {0, 1}


def test_repair_examples():
    labels = np.array([0] * 8 + [1] * 2)
    fixed = repair_clusters(labels, 2, 4, seed=0)
    assert np.bincount(fixed).tolist() == [6, 4]
    assert np.all(fixed[8:] == 1)
    untouched = repair_clusters(labels, 2, 2)
    np.testing.assert_array_equal(untouched, labels)
    with pytest.raises(ValueError, match="cannot"):
        repair_clusters(np.zeros(10, int), 5, 5)


def test_repair_moves_cheapest_points():
    labels = np.array([0, 0, 0, 0, 1])
    scores = np.array([[0, -5], [0, -1], [0, -3], [0, -9], [-9, 0]], dtype=float)
    fixed = repair_clusters(labels, 2, 2, scores=scores)
    np.testing.assert_array_equal(fixed, [0, 1, 0, 0, 1])


def test_repair_fills_empty_cluster():
    fixed = repair_clusters(np.zeros(30, int), 3, 5, seed=1)
    assert np.bincount(fixed, minlength=3).min() >= 5


def test_m_step_builds_cluster_km(small_two_cluster):
    data, truth = small_two_cluster
    model = m_step(data, truth, 2, 0.3)
    for c in range(2):
        sf = kaplan_meier(data.times[truth == c], data.events[truth == c])
        np.testing.assert_array_equal(model.experts[c].survival.values, sf.values)
        assert model.experts[c].member_count == int(np.sum(truth == c))


def test_single_cluster_equals_global_km(small_two_cluster):
    data, _ = small_two_cluster
    model = fit(data, FitConfig(k=1, n_restarts=1))
    grid = np.linspace(0, data.times.max(), 50)
    global_km = kaplan_meier(data.times, data.events)(grid)
    np.testing.assert_allclose(predict_survival(model, data.features, grid), np.tile(global_km, (data.n, 1)))


def test_fit_is_deterministic(small_two_cluster):
    data, _ = small_two_cluster
    cfg = FitConfig(k=2, n_restarts=2, seed=3)
    a, b = fit(data, cfg), fit(data, cfg)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


def test_fit_keeps_best_restart(small_two_cluster):
    data, _ = small_two_cluster
    model = fit(data, FitConfig(k=2, n_restarts=3, seed=5))
    finals = [t.final_log_likelihood for t in model.diagnostics]
    assert model.selected_restart == int(np.argmax(finals))
    assert observed_log_likelihood(model, data) == pytest.approx(max(finals))


def test_fit_needs_enough_rows(small_two_cluster):
    data, _ = small_two_cluster
    with pytest.raises(ValueError, match="min_cluster_size"):
        fit(data.subset(np.arange(20)), FitConfig(k=3, min_cluster_size=10))


def test_model_roundtrip(small_two_cluster, tmp_path):
    data, _ = small_two_cluster
    model = fit(data, FitConfig(k=2, n_restarts=1, outlier_weight=0.05))
    path = tmp_path / "m.json"
    model.save(path)
    back = SurvMixModel.from_dict(json.loads(path.read_text()))
    grid = np.linspace(0, 5, 20)
    np.testing.assert_array_equal(predict_survival(back, data.features, grid), predict_survival(model, data.features, grid))
    np.testing.assert_allclose(observed_log_likelihood(back, data), observed_log_likelihood(model, data))


@pytest.mark.parametrize("k", [2, 3])
def test_survival_outputs_are_valid(small_two_cluster, k):
    data, _ = small_two_cluster
    model = fit(data, FitConfig(k=k, n_restarts=1))
    grid = np.concatenate([[0.0], np.sort(np.random.default_rng(0).uniform(0, 30, 200))])
    s = predict_survival(model, data.features, grid)
    assert np.all(s[:, 0] == 1.0)
    assert np.all(np.diff(s, axis=1) <= 1e-15)
    assert np.all((s >= 0) & (s <= 1))


def test_config_validation():
    for bad in (dict(k=0), dict(outlier_weight=1.0), dict(n_restarts=0), dict(churn_tol=-1)):
        with pytest.raises(ValueError):
            FitConfig(**bad)
