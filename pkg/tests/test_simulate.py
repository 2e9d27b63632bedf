import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gwcoal import (CoalescenceQuery, ResourceLimit, SampleTooLarge, annealed_estimate, full_distribution,
                    limit_law_estimate, lnary_model, martingale_means, martingale_sample, martingale_samples,
                    quenched_prob, sample_coalescence, simulate, validate)
from gwcoal.simulate import annealed_samples

RANDOM_MODEL = validate({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5})


def test_deterministic_tree_state(binary_unit):
    s = simulate(binary_unit, 2, track_from=0, seed=1)
    assert s.population == 6
    assert sorted(s.counts.tolist()) == [2, 4]
    assert quenched_prob(s, 2) == pytest.approx(7 / 15, abs=1e-15)
    assert quenched_prob(s, 6) == 0.0
    assert quenched_prob(simulate(binary_unit, 2, track_from=1, seed=1), 2) == pytest.approx(1 / 5, abs=1e-15)


def test_retrack_matches_fresh_tracking(binary_unit):
    s = simulate(binary_unit, 4, seed=3, keep_ancestry=True)
    for m in range(4):
        fresh = simulate(binary_unit, 4, track_from=m, seed=3)
        assert quenched_prob(s, 2, m=m) == pytest.approx(quenched_prob(fresh, 2), abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 7), st.data())
def test_population_identity_and_growth(seed, n, data):
    m = data.draw(st.integers(0, n - 1))
    s = simulate(RANDOM_MODEL, n, track_from=m, seed=seed, keep_ancestry=True)
    assert s.counts.sum() == s.population
    assert s.population >= n
    assert len(s.founders) == len(s.counts)
    assert s.immigration_log.size == n and np.all(s.immigration_log >= 1)
    # the retracked state describes the same generation-n population
    for mm in range(n):
        assert s.retrack(mm).population == s.population


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 7))
def test_quenched_prob_monotone_in_m(seed, n):
    s = simulate(RANDOM_MODEL, n, seed=seed, keep_ancestry=True)
    vals = [quenched_prob(s, 2, m=m) for m in range(n)]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))
    assert all(0 <= v <= 1 for v in vals)


def test_direct_samples_follow_quenched_law():
    s = simulate(RANDOM_MODEL, 6, seed=11, keep_ancestry=True)
    draws = sample_coalescence(s, 2, rng=5, size=40_000)
    for m in range(6):
        q = quenched_prob(s, 2, m=m)
        freq = np.mean((draws >= m) & np.isfinite(draws))
        assert abs(freq - q) <= 4 * math.sqrt(q * (1 - q) / draws.size) + 1e-12


def test_single_draw_type(binary_unit):
    s = simulate(binary_unit, 3, seed=0, keep_ancestry=True)
    t = sample_coalescence(s, 2, rng=0)
    assert t == math.inf or (isinstance(t, int) and 0 <= t < 3)
    with pytest.raises(ValueError):
        sample_coalescence(simulate(binary_unit, 3, seed=0), 2)


def test_sample_too_large(binary_unit):
    s = simulate(binary_unit, 2, seed=0, keep_ancestry=True)
    with pytest.raises(SampleTooLarge):
        quenched_prob(s, 7)
    with pytest.raises(SampleTooLarge):
        sample_coalescence(s, 7)


def test_resource_limit(monkeypatch):
    monkeypatch.setenv("GWC_POP_CAP", "1000")
    with pytest.raises(ResourceLimit):
        simulate(lnary_model(3, 2), 8, seed=0, keep_ancestry=True)


def test_reproducible_and_thread_independent(monkeypatch):
    a = annealed_samples(RANDOM_MODEL, 6, 2, 1, 10_000, seed=42)
    b = annealed_samples(RANDOM_MODEL, 6, 2, 1, 10_000, seed=42)
    monkeypatch.setenv("GWC_THREADS", "3")
    c = annealed_samples(RANDOM_MODEL, 6, 2, 1, 10_000, seed=42)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)
    assert not np.array_equal(a, annealed_samples(RANDOM_MODEL, 6, 2, 1, 10_000, seed=43))


def test_deterministic_model_has_zero_error(binary_unit):
    est = annealed_estimate(binary_unit, 5, 2, 2, 500, seed=0)
    assert est.std_error == 0.0
    assert est.mean == pytest.approx(full_distribution(CoalescenceQuery(binary_unit, 5, 2)).tail[2], abs=1e-12)


@pytest.mark.parametrize("mode", ["quenched", "direct"])
def test_estimators_near_exact(mode):
    exact = full_distribution(CoalescenceQuery(RANDOM_MODEL, 5, 2)).tail[1]
    est = annealed_estimate(RANDOM_MODEL, 5, 2, 1, 20_000, seed=7, mode=mode)
    assert abs(est.mean - exact) <= 4 * est.std_error
    assert est.to_json()["horizon_n"] == 5


def test_martingale_identities():
    s = martingale_samples(RANDOM_MODEL, 8, 5000, seed=1)
    W, X, V = s.T
    assert np.all(V < X**2)
    assert np.all(W <= X) and np.all(W > 0)
    one = martingale_sample(RANDOM_MODEL, 8, seed=9)
    assert one.V_n < one.X_n**2 and one.n == 8


def test_martingale_means_unit_immigration():
    mu = 1.5
    ex, _ = martingale_means(validate({1: 0.5, 2: 0.5}, {1: 1.0}), 10)
    assert ex == pytest.approx(mu * (mu**10 - 1) / (mu**10 * (mu - 1)), rel=1e-14)
    # deterministic tree: X_n and V_n are not random
    ex, ev = martingale_means(lnary_model(2, 1), 6)
    s = martingale_samples(lnary_model(2, 1), 6, 10, seed=0)
    assert s[0, 1] == pytest.approx(ex, rel=1e-14) and s[0, 2] == pytest.approx(ev, rel=1e-14)


def test_limit_law_deterministic():
    est = limit_law_estimate(lnary_model(2, 1), 1, n=15, replicates=50, seed=0)
    assert est.std_error == 0.0
    assert est.mean == pytest.approx(5 / 24, abs=1e-4)
    assert est.horizon_remainder == pytest.approx(2.0**-15)
    with pytest.raises(ValueError):
        limit_law_estimate(lnary_model(2, 1), 1, i=3)


def test_argument_validation():
    with pytest.raises(ValueError):
        annealed_estimate(RANDOM_MODEL, 4, 2, 1, 10, seed=0, mode="bogus")
    with pytest.raises(ValueError):
        annealed_estimate(RANDOM_MODEL, 4, 2, 1, 0, seed=0)
    with pytest.raises(ValueError):
        simulate(RANDOM_MODEL, 3, track_from=3)
