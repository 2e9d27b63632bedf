"""Reference values that do not go through the quadrature engine.

* closed forms for the deterministic ``l``-nary tree with ``k`` immigrants per
  generation (exact rational arithmetic);
* the nested-sum closed form for binary offspring with immigration law
  ``(z^2 + z) / 2``;
* brute-force enumeration of every tree realization of a small model.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ResourceLimit
from .models import DistSpec, ModelSpec

ENUMERATION_CAP = 200_000
BINARY_RANDOM_TERM_CAP = 50_000_000


def falling_factorial(x: int, k: int) -> int:
    if int(x) != x:
        raise TypeError("falling factorial is defined here for integers only")
    x = int(x)
    out = 1
    for j in range(k):
        out *= x - j
    return out


@dataclass(frozen=True)
class LnaryParams:
    l: int
    k: int

    def __post_init__(self):
        if self.l < 2 or self.k < 1:
            raise ValueError(f"need l >= 2 and k >= 1, got l={self.l}, k={self.k}")


def _lnary_block(p: LnaryParams, n: int, i: int, t_range) -> Fraction:
    l, k = p.l, p.k
    total = Fraction(0)
    for s in range(i):
        denom = math.factorial(i - 1) * (k * l * (1 - l**n) - s * (1 - l))
        sign_binom = (-1) ** (i - s - 1) * math.comb(i - 1, s)
        for t in t_range:
            total += Fraction(sign_binom * falling_factorial(l**t, i) * k * (1 - l), denom)
    return total


def _check_ni(n, i, m=None):
    if not n >= i >= 2:
        raise ValueError(f"need n >= i >= 2, got n={n}, i={i}")
    if m is not None and not 0 <= m < n:
        raise ValueError(f"need 0 <= m < n, got m={m}")


def lnary_p_infinity(p: LnaryParams, n: int, i: int, exact: bool = False):
    _check_ni(n, i)
    val = 1 - _lnary_block(p, n, i, range(1, n + 1))
    return val if exact else float(val)


def lnary_tail(p: LnaryParams, n: int, m: int, i: int, exact: bool = False):
    _check_ni(n, i, m)
    l, k = p.l, p.k
    first = Fraction(0)
    for s in range(i):
        denom = math.factorial(i - 1) * (k * l * (1 - l**n) - s * (1 - l))
        first += Fraction((-1) ** (i - s - 1) * math.comb(i - 1, s)
                          * falling_factorial(l ** (n - m), i) * k * l * (1 - l**m), denom)
    val = first + _lnary_block(p, n, i, range(1, n - m + 1))
    return val if exact else float(val)


def lnary_pair_p_infinity(p: LnaryParams, n: int, exact: bool = False):
    """The ``i = 2`` specialisation of :func:`lnary_p_infinity`."""
    l, k = p.l, p.k
    val = 1 - Fraction(k * (1 - l) * (l**2 * (1 - l ** (2 * n)) - l * (l + 1) * (1 - l**n)),
                       (1 + l) * (k * l * (1 - l**n) - (1 - l)) * (k * l * (1 - l**n)))
    return val if exact else float(val)


def lnary_pair_tail(p: LnaryParams, n: int, m: int, exact: bool = False):
    l, k = p.l, p.k
    a = Fraction(l ** (n - m) * (l ** (n - m) - 1) * (1 - l**m) * (1 - l),
                 (k * l - k * l ** (n + 1) - (1 - l)) * (1 - l**n))
    b = Fraction(k * (1 - l) * (l**2 * (1 - l ** (2 * (n - m))) - l * (l + 1) * (1 - l ** (n - m))),
                 (1 + l) * (k * l * (1 - l**n) - (1 - l)) * (k * l * (1 - l**n)))
    val = a + b
    return val if exact else float(val)


def lnary_limit_p_infinity(p: LnaryParams, exact: bool = False):
    """lim_n P(X_2 = inf) = ((1+l)k - (l-1)) / ((1+l)k)."""
    l, k = p.l, p.k
    val = Fraction((1 + l) * k - (l - 1), (1 + l) * k)
    return val if exact else float(val)


def lnary_limit_tail(p: LnaryParams, m: int, exact: bool = False):
    """lim_n P(m <= X_2 < inf) = l^(-2m) (l-1) / k * ((l^m - 1)/l + 1/(1+l))."""
    l, k = p.l, p.k
    val = Fraction(l - 1, l ** (2 * m) * k) * (Fraction(l**m - 1, l) + Fraction(1, 1 + l))
    return val if exact else float(val)


def binary_random_tail(n: int, m: int, i: int, wide_k_range: bool = False) -> float:
    """P(m <= X < inf) for f = z^2, g = (z^2 + z)/2 from the four-block nested sum.

    The first two blocks expand the generation-m ancestor term over
    ``l = 1..m``, ``j < 2^(n-m)``, ``h < 2^(l-1)`` and ``k < 2^(m-l)``; the last
    two expand the immigrant terms. ``wide_k_range=True`` lets ``k`` run to
    ``2^(n-l) - 1`` instead, a variant of the formula that overcounts the
    ancestor term whenever ``m >= 1``; it exists only so the two can be compared.
    """
    _check_ni(n, i, m)
    if n > 20:
        raise ResourceLimit("binary_random_tail supports n <= 20")
    k_top = (lambda l: n - l) if wide_k_range else (lambda l: m - l)
    cost = i * (2 * sum(2 ** (n - m + l - 1 + k_top(l)) for l in range(1, m + 1)) + 2 * (n - m) * 2 ** (n - 1))
    if cost > BINARY_RANDOM_TERM_CAP:
        raise ResourceLimit(f"binary_random_tail would sum ~{cost:.3g} terms")
    fact = math.factorial(i - 1)
    parts = []
    for s in range(i):
        coef = math.comb(i - 1, s) * (-1) ** (i - 1 - s) / fact
        ff_nm = float(falling_factorial(2 ** (n - m), i))
        for l in range(1, m + 1):
            j = np.arange(2 ** (n - m), dtype=np.float64)[:, None, None]
            h = np.arange(2 ** (l - 1), dtype=np.float64)[None, :, None]
            k = np.arange(2 ** k_top(l), dtype=np.float64)[None, None, :]
            A = 2.0 ** (n + 1) - 2 - s + 2 * j + h * 2.0 ** (n - m + 1) + k * 2.0 ** (n - m + l + 1)
            c = coef * ff_nm
            parts.append((c * 2.0 ** (-n + l + 1) / (A + 2.0 ** (n - m + l))).ravel())
            parts.append((c * 2.0 ** (-n + l) / A).ravel())
        for kk in range(1, n - m + 1):
            j = np.arange(2 ** (kk - 1), dtype=np.float64)[:, None]
            ll = np.arange(2 ** (n - kk), dtype=np.float64)[None, :]
            B = 2.0 ** (n + 1) + ll * 2.0 ** (kk + 1) + 2 * j - 2 - s
            c = coef * float(falling_factorial(2**kk, i))
            parts.append((c * 2.0 ** (-n + 1) / (B + 2.0**kk)).ravel())
            parts.append((c * 2.0 ** (-n) / B).ravel())
    return math.fsum(np.concatenate(parts))


def binary_random_model() -> ModelSpec:
    return ModelSpec(DistSpec.point_mass(2), DistSpec(((1, 0.5), (2, 0.5))))


# -- enumeration ------------------------------------------------------------

def _exact_pmf(d: DistSpec) -> dict[int, Fraction]:
    return {v: Fraction(p) for v, p in d.pmf}


def _convolve(a: dict, b: dict) -> dict:
    out = defaultdict(Fraction)
    for x, px in a.items():
        for y, py in b.items():
            out[x + y] += px * py
    return dict(out)


class _Enumerator:
    def __init__(self, model: ModelSpec, cap: int):
        self.off = _exact_pmf(model.offspring)
        self.imm = _exact_pmf(model.immigration)
        self.cap = cap
        self._powers = {0: {0: Fraction(1)}}

    def offspring_of(self, c: int) -> dict:
        """Law of the total offspring of ``c`` individuals."""
        if c not in self._powers:
            self._powers[c] = _convolve(self.offspring_of(c - 1), self.off)
            if len(self._powers[c]) > self.cap:
                raise ResourceLimit("enumeration support too large")
        return self._powers[c]

    def population_law(self, m: int) -> dict:
        law = {0: Fraction(1)}
        for _ in range(m):
            nxt = defaultdict(Fraction)
            for size, p in law.items():
                for im, q in self.imm.items():
                    for child, r in self.offspring_of(size + im).items():
                        nxt[child] += p * q * r
            law = dict(nxt)
        return law

    def step(self, states: dict, add_immigrants: bool) -> dict:
        out = defaultdict(Fraction)
        for counts, p in states.items():
            branches = [(counts, p)]
            if add_immigrants:
                branches = [(counts + (1,) * im, p * q) for im, q in self.imm.items()]
            for cs, w in branches:
                partial = {(): w}
                for c in cs:
                    nxt = {}
                    for prefix, pw in partial.items():
                        for total, r in self.offspring_of(c).items():
                            key = prefix + (total,)
                            nxt[key] = nxt.get(key, 0) + pw * r
                    partial = nxt
                    if len(partial) > self.cap:
                        raise ResourceLimit("enumeration exceeds the state budget")
                for key, pw in partial.items():
                    out[tuple(sorted(key))] += pw
            if len(out) > self.cap:
                raise ResourceLimit("enumeration exceeds the state budget")
        return dict(out)


def enumerate_exact(model: ModelSpec, n: int, i: int, m: int, cap: int = ENUMERATION_CAP,
                    exact: bool = False):
    """Annealed P(m <= X < inf) by summing the quenched ratio over all trees.

    Each realization is summarized by the generation-``n`` descendant counts
    of every generation-``m`` individual and of every immigrant arriving at
    generations ``m..n-1``; its quenched probability is
    ``sum_l (count_l)_i / (N_n)_i``.
    """
    _check_ni(n, i, m)
    en = _Enumerator(model, cap)
    states = defaultdict(Fraction)
    for size, p in en.population_law(m).items():
        states[(1,) * size] += p
    states = dict(states)
    for _ in range(m, n):
        states = en.step(states, add_immigrants=True)
    total = Fraction(0)
    for counts, p in states.items():
        num = sum(falling_factorial(c, i) for c in counts)
        den = falling_factorial(sum(counts), i)
        total += p * Fraction(num, den)
    return total if exact else float(total)
