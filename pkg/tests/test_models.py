import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gwcoal import (BadPmf, DistSpec, DomainError, MassAtZero, NotSupercritical, load_model, moments,
                    pgf_eval, validate)


def test_validate_examples():
    m = validate({2: 1.0}, {1: 1.0})
    assert m.mu == 2 and m.lam == 1 and m.sigma2 == 0
    assert validate({1: 0.5, 2: 0.5}, {1: 1.0}).mu == 1.5
    with pytest.raises(MassAtZero):
        validate({0: 0.3, 2: 0.7}, {1: 1.0})
    with pytest.raises(MassAtZero):
        validate({2: 1.0}, {0: 0.5, 1: 0.5})


@pytest.mark.parametrize("pmf, err", [
    ({1: 1.0}, NotSupercritical),
    ({1: 0.5, 2: 0.4}, BadPmf),
    ({1: 1.2, 2: -0.2}, BadPmf),
    ({1: 1e-16, 2: 1.0 - 1e-16}, BadPmf),
    ({}, BadPmf),
])
def test_validate_rejects(pmf, err):
    with pytest.raises(err):
        validate(pmf, {1: 1.0})


def test_renormalizes_within_tolerance():
    d = DistSpec(((1, 0.5), (2, 0.5 + 5e-13)))
    assert abs(sum(p for _, p in d.pmf) - 1.0) < 1e-15


def test_pgf_eval_examples():
    assert pgf_eval(DistSpec.point_mass(2), 0.5) == 0.25
    assert pgf_eval(DistSpec.from_any({1: 0.5, 2: 0.5}), 0.5) == 0.375
    assert pgf_eval(DistSpec.from_any({1: 0.2, 3: 0.8}), 1.0) == pytest.approx(1.0, abs=1e-15)
    for z in (-0.1, 1.1, float("nan")):
        with pytest.raises(DomainError):
            pgf_eval(DistSpec.point_mass(2), z)


def test_moments_examples():
    assert moments(DistSpec.point_mass(2)) == (2, 0)
    assert moments(DistSpec.from_any({1: 0.5, 2: 0.5})) == pytest.approx((1.5, 0.25), abs=1e-15)
    assert moments(DistSpec.from_any({1: 0.5, 3: 0.5})) == pytest.approx((2.0, 1.0), abs=1e-15)


pmfs = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=5).flatmap(
    lambda w: st.tuples(st.permutations(range(1, 8)).map(lambda p: sorted(p[: len(w)])), st.just(w)))


def _dist(sample):
    values, w = sample
    total = sum(w)
    return DistSpec(tuple(zip(values, [x / total for x in w])))


@settings(max_examples=60, deadline=None)
@given(pmfs)
def test_pgf_monotone_convex_and_anchored(sample):
    d = _dist(sample)
    z = np.linspace(0, 1, 201)
    v = pgf_eval(d, z)
    assert v[0] == 0.0
    assert v[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(v) >= -1e-15)
    assert np.all(np.diff(v, 2) >= -1e-12)


@settings(max_examples=60, deadline=None)
@given(pmfs)
def test_moments_match_direct_sums(sample):
    d = _dist(sample)
    k = d.values.astype(float)
    p = d.probs
    mean, var = moments(d)
    assert mean == pytest.approx((k * p).sum(), abs=1e-12)
    assert var == pytest.approx((k * k * p).sum() - (k * p).sum() ** 2, abs=1e-12)
    assert var >= 0


def test_load_model_and_digest_ignore_whitespace(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    data = {"offspring": {"pmf": [[1, 0.5], [2, 0.5]]}, "immigration": {"pmf": [[1, 1.0]]}}
    a.write_text(json.dumps(data))
    b.write_text(json.dumps(data, indent=4) + "\n\n")
    ma, mb = load_model(a), load_model(b)
    assert ma == mb and ma.digest() == mb.digest()


def test_load_model_bad_keys(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"offspring": {"pmf": [[2, 1.0]]}, "immigrants": {"pmf": [[1, 1.0]]}}))
    with pytest.raises(BadPmf):
        load_model(p)
