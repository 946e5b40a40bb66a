import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pubcausal.effects import (AteEstimate, ForestConfig, VaineConfig, causal_forest_ate, confounded_data,
                               fit_propensity, format_cell, mean_across_methods, naive_ate, null_data, psm_ate,
                               vaine_ate)
from pubcausal.effects.forest import fit_forest, oob_cate
from pubcausal.effects.vaine import group_effect
from pubcausal.panel import EffectData

SMALL_FOREST = ForestConfig(n_trees=60)


def _flip(d):
    return EffectData(d.X, 1 - d.t, d.y)


def _shift(d, c):
    return EffectData(d.X, d.t, d.y + c)


def test_naive_fixtures():
    d = EffectData(np.zeros(5), [1, 1, 1, 0, 0], [1, 1, 0, 0, 0])
    assert naive_ate(d).estimate == pytest.approx(2 / 3)
    assert naive_ate(EffectData(np.zeros(4), [1, 0, 1, 0], [3.0] * 4)).estimate == 0.0
    assert not naive_ate(EffectData(np.zeros(3), [0, 0, 0], [1, 2, 3])).defined
    rng = np.random.default_rng(0)
    t = rng.integers(0, 2, 2000)
    d = EffectData(rng.normal(size=2000), t, 2 * t + rng.normal(size=2000))
    assert naive_ate(d).estimate == pytest.approx(2.0, abs=0.1)


def test_estimate_row_shape():
    e = naive_ate(EffectData(np.zeros(3), [1, 0, 0], [1.0, 0.0, 0.0]))
    assert e.n_treated + e.n_control == 3
    assert e.row()[-1] == 1


def test_propensity_independent_treatment():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(3000, 3))
    t = (rng.random(3000) < 0.3).astype(int)
    m = fit_propensity(X, t)
    assert m.converged
    assert np.all(np.abs(m.coefficients) < 0.15)
    assert np.mean(m.predict(X)) == pytest.approx(t.mean(), abs=1e-6)


def test_propensity_sign_and_degenerate():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(2000, 2))
    t = ((X[:, 0] + 0.5 * rng.normal(size=2000)) > 0).astype(int)
    assert fit_propensity(X, t).coefficients[0] > 1.0
    single = np.zeros(50, dtype=int)
    single[3] = 1
    m = fit_propensity(X[:50], single)
    assert m.degenerate
    p = m.predict(X[:50])
    assert np.all((p >= 1e-6) & (p <= 1 - 1e-6))


def test_propensity_separation_clamped():
    X = np.linspace(-3, 3, 200)[:, None]
    t = (X[:, 0] > 0).astype(int)
    m = fit_propensity(X, t, max_iter=500)
    p = m.predict(X)
    assert np.all((p >= 1e-6) & (p <= 1 - 1e-6))


def test_psm_confounded():
    d = confounded_data(4000, seed=3)
    assert psm_ate(d).estimate == pytest.approx(2.0, abs=0.15)
    assert naive_ate(d).estimate > 2.3


def test_psm_no_confounding_tracks_naive():
    d = confounded_data(4000, seed=4, confounding=0.0)
    assert psm_ate(d).estimate == pytest.approx(naive_ate(d).estimate, abs=0.1)


def test_psm_caliper_exhaustion():
    X = np.r_[np.full(20, -5.0), np.full(20, 5.0)][:, None]
    t = np.r_[np.zeros(20), np.ones(20)]
    e = psm_ate(EffectData(X, t, np.zeros(40)), caliper_sd=0.01)
    assert not e.defined and e.diagnostics["matched_pairs"] == 0


def test_forest_confounded_and_deterministic():
    d = confounded_data(4000, seed=6)
    a = causal_forest_ate(d, seed=11)
    assert a.estimate == pytest.approx(2.0, abs=0.2)
    b = causal_forest_ate(d, seed=11)
    assert a.estimate == b.estimate


def test_forest_heterogeneous():
    d = confounded_data(4000, seed=7, tau=lambda c: 1.0 + (c > 0))
    e = causal_forest_ate(d, seed=1)
    assert e.estimate == pytest.approx(1.5, abs=0.2)
    trees, masks, _ = fit_forest(d.X, d.t, d.y, ForestConfig(), seed=1)
    cate = oob_cate(trees, masks, d.X)
    pos = d.X[:, 0] > 0
    assert cate[pos].mean() - cate[~pos].mean() == pytest.approx(1.0, abs=0.3)


def test_forest_null():
    assert abs(causal_forest_ate(null_data(2000, seed=8), SMALL_FOREST, seed=2).estimate) < 0.1


def test_forest_skips_infeasible_trees():
    d = EffectData(np.zeros((12, 1)), [1] + [0] * 11, np.arange(12.0))
    e = causal_forest_ate(d, SMALL_FOREST, seed=0)
    assert not e.defined
    assert e.diagnostics["skipped_trees"] * 2 > SMALL_FOREST.n_trees


def test_vaine_confounded():
    d = confounded_data(4000, seed=9)
    e = vaine_ate(d, seed=3)
    assert e.estimate == pytest.approx(2.0, abs=0.25)
    assert e.diagnostics["n_retained"] >= 1


def test_vaine_group_effect_is_mean_difference():
    t = np.array([1] * 10 + [0] * 10)
    y = np.array([1.0] * 9 + [0.0] + [1.0] + [0.0] * 9)
    eff, p = group_effect(y, t)
    assert eff == pytest.approx(0.8, abs=1e-12)
    assert 0.0 <= p <= 1.0


@given(st.integers(0, 10_000))
def test_group_effect_mean_difference_property(seed):
    rng = np.random.default_rng(seed)
    t = rng.integers(0, 2, 30)
    t[:2] = [0, 1]
    y = rng.normal(size=30)
    eff, _ = group_effect(y, t)
    assert eff == pytest.approx(y[t == 1].mean() - y[t == 0].mean(), abs=1e-9)


def test_vaine_undefined_without_significant_group():
    rng = np.random.default_rng(0)
    d = EffectData(rng.normal(size=(200, 2)), rng.integers(0, 2, 200), np.zeros(200))
    e = vaine_ate(d, VaineConfig(k=3, n_init=5))
    assert not e.defined and math.isnan(e.estimate)


@given(st.integers(0, 1000), st.floats(-50, 50))
def test_shift_equivariance(seed, c):
    d = confounded_data(300, seed=seed)
    s = _shift(d, c)
    assert naive_ate(s).estimate == pytest.approx(naive_ate(d).estimate, abs=1e-9)
    assert psm_ate(s, seed=1).estimate == pytest.approx(psm_ate(d, seed=1).estimate, abs=1e-9)
    cfg = VaineConfig(k=3, n_init=3, alpha=0.5)
    a, b = vaine_ate(d, cfg, seed=1), vaine_ate(s, cfg, seed=1)
    assert a.defined == b.defined
    if a.defined:
        assert b.estimate == pytest.approx(a.estimate, abs=1e-9)


def test_forest_shift_equivariance():
    d = confounded_data(600, seed=12)
    cfg = ForestConfig(n_trees=20)
    a = causal_forest_ate(d, cfg, seed=4).estimate
    b = causal_forest_ate(_shift(d, 7.5), cfg, seed=4).estimate
    assert b == pytest.approx(a, abs=1e-9)


@given(st.integers(0, 1000))
def test_label_flip_negates(seed):
    d = confounded_data(300, seed=seed)
    assert naive_ate(_flip(d)).estimate == -naive_ate(d).estimate
    cfg = VaineConfig(k=3, n_init=3, alpha=0.5)
    a, b = vaine_ate(d, cfg, seed=2), vaine_ate(_flip(d), cfg, seed=2)
    assert a.defined == b.defined
    if a.defined:
        assert b.estimate == -a.estimate


def test_seeded_determinism():
    d = confounded_data(800, seed=13)
    assert vaine_ate(d, seed=5).estimate == vaine_ate(d, seed=5).estimate
    cfg = ForestConfig(n_trees=30)
    assert causal_forest_ate(d, cfg, seed=5).estimate == causal_forest_ate(d, cfg, seed=5).estimate


def test_psm_beats_naive_mostly():
    wins = 0
    for seed in range(100):
        d = confounded_data(1000, seed=seed)
        wins += abs(psm_ate(d).estimate - 2.0) < abs(naive_ate(d).estimate - 2.0)
    assert wins >= 90


def _est(method, value, defined=True):
    return AteEstimate(method, "t", "y", 2015, value, 1, 1, defined)


def test_mean_across_methods():
    assert mean_across_methods([_est("causal_forest", 0.71), _est("vaine", 0.88)]) == 0.795
    assert format_cell(mean_across_methods([0.71, 0.88])) == "0.80"
    assert mean_across_methods([_est("causal_forest", 0.76), _est("vaine", 0.0)]) == 0.38
    assert mean_across_methods([_est("causal_forest", 0.5), _est("vaine", math.nan, False)]) == 0.5
    assert math.isnan(mean_across_methods([_est("vaine", math.nan, False)]))
    assert mean_across_methods([_est("psm", 3.0), _est("vaine", 1.0)]) == 1.0
    assert mean_across_methods([_est("psm", 3.0), _est("vaine", 1.0)], methods=None) == 2.0


def test_format_cell():
    assert format_cell(0.795) == "0.80"
    assert format_cell(0.125) == "0.13"
    assert format_cell(-0.001) == "0.00"
    assert format_cell(math.nan) == "0.00"
    assert format_cell(1.8) == "1.80"


def test_replace_keeps_diagnostics_out_of_equality():
    a = _est("psm", 1.0)
    assert replace(a, diagnostics={"x": 1}) == a
