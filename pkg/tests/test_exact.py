import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from gwcoal import (CoalescenceQuery, DistSpec, QuadratureFailure, falling_factorial_expectation,
                    full_distribution, lnary_model, prob_infinity, prob_tail, validate)
from gwcoal.exact import integrand_immigrant_term, integrand_tail
from gwcoal.oracles import falling_factorial


def test_deterministic_tree_hand_counts(binary_unit):
    # generation 2 has 6 individuals: 4 from the first immigrant, 2 from the second;
    # 6 of the 15 pairs share a parent
    d = full_distribution(CoalescenceQuery(binary_unit, 2, 2))
    assert d.p_infinity == pytest.approx(8 / 15, abs=1e-12)
    assert d.tail[0] == pytest.approx(7 / 15, abs=1e-12)
    assert d.tail[1] == pytest.approx(1 / 5, abs=1e-12)
    np.testing.assert_allclose(d.pmf, [4 / 15, 1 / 5], atol=1e-12)


def test_integrand_hand_values(binary_unit):
    assert integrand_tail(CoalescenceQuery(binary_unit, 2, 2), 1, 0.5) == pytest.approx(0.125, abs=1e-15)
    q1 = CoalescenceQuery(validate({2: 1.0}, {1: 1.0}), 2, 2)
    # n = 2, k = 1: (1-z) f''(z) g'(f(z)) g(f_2(z)) = 0.5 * 2 * 1 * 0.0625
    assert integrand_immigrant_term(q1, 1, 0.5) == pytest.approx(0.0625, abs=1e-15)


def test_first_term_vanishes_at_m0(binary_unit):
    assert np.all(integrand_tail(CoalescenceQuery(binary_unit, 3, 2), 0, np.linspace(0, 1, 11)) == 0)


def _sympy_tail(f, g, n, m, i):
    """The integral representation evaluated in exact rational arithmetic."""
    z, y = sp.symbols("z y")
    fl = [z]
    for _ in range(n):
        fl.append(sp.expand(f.subs(z, fl[-1])))
    gz = lambda e: g.subs(z, e)  # noqa: E731
    total = sp.Integer(0)
    pre = (1 - z) ** (i - 1) / sp.factorial(i - 1)
    if m > 0:
        phi = sp.Mul(*[gz(f_at) for f_at in [fl[l].subs(z, y) for l in range(1, m + 1)]])
        dphi = sp.diff(phi, y).subs(y, fl[n - m])
        integrand = pre * sp.diff(fl[n - m], z, i) * dphi * sp.Mul(*[gz(fl[l]) for l in range(1, n - m + 1)])
        total += sp.integrate(sp.expand(integrand), (z, 0, 1))
    for k in range(1, n - m + 1):
        others = sp.Mul(*[gz(fl[l]) for l in range(1, n + 1) if l != k])
        integrand = pre * sp.diff(fl[k], z, i) * sp.diff(g, z).subs(z, fl[k]) * others
        total += sp.integrate(sp.expand(integrand), (z, 0, 1))
    return total


@pytest.mark.parametrize("n, i", [(2, 2), (3, 2), (3, 3)])
def test_against_symbolic_integration(n, i):
    z = sp.symbols("z")
    f = (z + z**2) / 2
    g = (z + 2 * z**3) / 3
    model = validate({1: 0.5, 2: 0.5}, {1: 1 / 3, 3: 2 / 3})
    d = full_distribution(CoalescenceQuery(model, n, i))
    for m in range(n):
        assert d.tail[m] == pytest.approx(float(_sympy_tail(f, g, n, m, i)), abs=1e-12)


def _brute_expectation(phi, h, n, parts):
    """Exact expectation by summing over all outcomes of (Y_1..Y_n, Z)."""
    total = Fraction(0)
    i = sum(parts)
    for ys in itertools.product(phi.items(), repeat=n):
        w = Fraction(1)
        for _, p in ys:
            w *= p
        for zv, pz in h.items():
            s = sum(y for y, _ in ys) + zv
            den = falling_factorial(s, i)
            if den == 0:
                continue
            num = 1
            for (y, _), k in zip(ys, parts):
                num *= falling_factorial(y, k)
            total += w * pz * Fraction(num, den)
    return total


small_pmf = st.dictionaries(st.integers(1, 4), st.integers(1, 5), min_size=1, max_size=3)
zero_pmf = st.dictionaries(st.integers(0, 3), st.integers(1, 5), min_size=1, max_size=3)


@settings(max_examples=40, deadline=None)
@given(small_pmf, zero_pmf, st.integers(1, 3), st.data())
def test_falling_factorial_expectation_matches_enumeration(yw, zw, n, data):
    j = data.draw(st.integers(1, n))
    parts = data.draw(st.lists(st.integers(1, 3), min_size=j, max_size=j))
    phi_f = {k: Fraction(v, sum(yw.values())) for k, v in yw.items()}
    h_f = {k: Fraction(v, sum(zw.values())) for k, v in zw.items()}
    phi = DistSpec(tuple((k, float(p)) for k, p in sorted(phi_f.items())))
    hc = np.zeros(max(h_f) + 1)
    for k, p in h_f.items():
        hc[k] = float(p)
    got = falling_factorial_expectation(phi, hc, n, parts)
    assert got == pytest.approx(float(_brute_expectation(phi_f, h_f, n, parts)), abs=1e-11)


def test_falling_factorial_expectation_simple():
    # Y = 2, Z = 1: (2)_2 / (3)_2 = 1/3
    assert falling_factorial_expectation(DistSpec.point_mass(2), [0, 1], 1, [2]) == pytest.approx(1 / 3, abs=1e-13)
    with pytest.raises(ValueError):
        falling_factorial_expectation(DistSpec.point_mass(2), [1], 1, [1, 1])


models = st.sampled_from([
    lnary_model(2, 1), lnary_model(3, 2),
    validate({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5}),
    validate({1: 0.2, 2: 0.3, 4: 0.5}, {1: 0.7, 3: 0.3}),
    validate({1: 0.6, 3: 0.4}, {2: 1.0}),
])


@settings(max_examples=25, deadline=None)
@given(models, st.integers(2, 7), st.data())
def test_distribution_invariants(model, n, data):
    i = data.draw(st.integers(2, min(n, 4)))
    d = full_distribution(CoalescenceQuery(model, n, i))
    assert d.tail[0] + d.p_infinity == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.diff(d.tail) <= 1e-12)
    assert np.all(d.pmf >= 0) and np.all(d.tail >= 0) and np.all(d.tail <= 1)
    assert d.pmf.sum() + d.p_infinity == pytest.approx(1.0, abs=1e-9)
    assert d.quadrature_error < 1e-9


@pytest.mark.parametrize("model", [lnary_model(2, 1), validate({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5})])
def test_separate_entry_points_agree(model):
    q = CoalescenceQuery(model, 6, 3)
    d = full_distribution(q)
    assert prob_infinity(q) == pytest.approx(d.p_infinity, abs=1e-12)
    for m in range(6):
        assert prob_tail(q, m) == pytest.approx(d.tail[m], abs=1e-12)


def test_tighter_tolerance_is_self_consistent():
    q = CoalescenceQuery(validate({1: 0.3, 2: 0.4, 3: 0.3}, {1: 0.5, 2: 0.5}), 8, 2)
    a, b = full_distribution(q, tol=1e-10), full_distribution(q, tol=1e-13)
    np.testing.assert_allclose(a.tail, b.tail, atol=1e-9)


def test_more_individuals_coalesce_less():
    model = validate({1: 0.5, 2: 0.5}, {1: 1.0})
    t2 = full_distribution(CoalescenceQuery(model, 6, 2)).tail
    t3 = full_distribution(CoalescenceQuery(model, 6, 3)).tail
    assert np.all(t3 <= t2 + 1e-12)


def test_all_individuals_sampled():
    # i = n on the deterministic binary tree: at generation 3 there are 14 individuals
    d = full_distribution(CoalescenceQuery(lnary_model(2, 1), 3, 3))
    assert d.p_infinity == pytest.approx(76 / 91, abs=1e-12)


@pytest.mark.parametrize("n, i", [(1, 2), (3, 4), (3, 1)])
def test_query_validation(n, i):
    with pytest.raises(ValueError):
        CoalescenceQuery(lnary_model(2, 1), n, i)


def test_prob_tail_range():
    with pytest.raises(ValueError):
        prob_tail(CoalescenceQuery(lnary_model(2, 1), 3, 2), 3)


def test_quadrature_failure_on_nonfinite():
    from gwcoal.quadrature import integrate

    with pytest.raises(QuadratureFailure):
        integrate(lambda z: (1 / (z - 0.5))[None, :] * np.nan, np.array([0.0, 1.0]))


def test_quadrature_polynomial_exact():
    from gwcoal.quadrature import geometric_breakpoints, integrate

    vals, errs = integrate(lambda z: np.vstack([z**5, np.exp(z)]), geometric_breakpoints(0, 1, 8))
    assert vals[0] == pytest.approx(1 / 6, abs=1e-15)
    assert vals[1] == pytest.approx(math.e - 1, abs=1e-14)
