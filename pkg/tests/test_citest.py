import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import chain
from pubcausal.discovery.citest import FisherZ, correlation_matrix, fisher_z_test, partial_correlation


def test_hand_value():
    C = np.array([[1.0, 0.5], [0.5, 1.0]])
    res = FisherZ(corr=C, n=103, alpha=0.01).test(0, 1, ())
    assert 0.5 * math.log(3.0) == pytest.approx(0.5493, abs=1e-4)
    assert res.statistic == pytest.approx(5.493, abs=1e-3)
    assert res.p_value < 1e-7
    assert not res.independent


def test_self_pair_dependent():
    res = FisherZ(corr=np.eye(3), n=50).test(1, 1, ())
    assert not res.independent and res.p_value == 0.0


def test_too_few_rows():
    with pytest.raises(ValueError):
        FisherZ(corr=np.eye(3), n=4).test(0, 1, (2,))


def test_low_rank_flag():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(200)
    data = np.column_stack([x, 2 * x, rng.standard_normal(200)])
    tester = FisherZ(data)
    res = tester.test(0, 2, (1,))
    assert res.low_rank and tester.low_rank_seen
    assert 0.0 <= res.p_value <= 1.0


def test_partial_correlation_matches_regression():
    rng = np.random.default_rng(1)
    X = chain(4000, rng)
    r, low = partial_correlation(correlation_matrix(X), 0, 2, (1,))
    res0 = X[:, 0] - np.polyval(np.polyfit(X[:, 1], X[:, 0], 1), X[:, 1])
    res2 = X[:, 2] - np.polyval(np.polyfit(X[:, 1], X[:, 2], 1), X[:, 1])
    assert r == pytest.approx(np.corrcoef(res0, res2)[0, 1], abs=1e-10)
    assert not low


def test_chain_conditional_independence_rate():
    hits = 0
    for seed in range(100):
        X = chain(5000, np.random.default_rng(seed))
        hits += fisher_z_test(X, 0, 2, (1,), alpha=0.01).independent
        assert not fisher_z_test(X, 0, 2, (), alpha=0.01).independent
    assert hits >= 95


@given(st.integers(0, 10_000), st.lists(st.floats(0.01, 100.0), min_size=4, max_size=4))
def test_scale_invariance(seed, scales):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((60, 4)) @ rng.standard_normal((4, 4))
    a = FisherZ(X)
    b = FisherZ(X * np.array(scales))
    for S in [(), (2,), (2, 3)]:
        assert a.test(0, 1, S).p_value == pytest.approx(b.test(0, 1, S).p_value, abs=1e-12)


@given(st.integers(0, 10_000))
def test_result_invariants(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((40, 4))
    t = FisherZ(X, alpha=0.05)
    res = t.test(0, 3, (1,))
    assert 0.0 <= res.p_value <= 1.0
    assert res.independent == (res.p_value > 0.05)
