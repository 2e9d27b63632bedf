"""Exact law of the coalescence time of ``i`` individuals sampled at generation ``n``.

With ``f_l`` the ``l``-fold iterate of the offspring p.g.f., ``g`` the immigration
p.g.f. and ``phi_m(y) = prod_{l=1..m} g(f_l(y))`` the p.g.f. of the generation-m
population,

    P(m <= X < inf) = 1/(i-1)! * int_0^1 (1-z)^(i-1) f_{n-m}^(i)(z) phi_m'(f_{n-m}(z))
                                        * prod_{l=1..n-m} g(f_l(z)) dz
                      + sum_{k=1..n-m} 1/(i-1)! * int_0^1 (1-z)^(i-1) f_k^(i)(z) g'(f_k(z))
                                        * prod_{l != k} g(f_l(z)) dz

and ``P(X = inf)`` is one minus the ``m = 0`` value. Derivatives of the iterates
come from forward jet propagation; the integrals from adaptive Gauss-Legendre
quadrature refined geometrically towards ``z = 1`` where the mass concentrates.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureFailure
from .jets import apply_poly, iterate_pgf_all, jet_constant, jet_variable
from .models import DistSpec, ModelSpec
from .quadrature import geometric_breakpoints, integrate

log = logging.getLogger(__name__)

QUAD_TOL = 1e-12
PMF_CLAMP = 1e-10
PROB_SLACK = 1e-12


@dataclass(frozen=True)
class CoalescenceQuery:
    model: ModelSpec
    n: int
    i: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and isinstance(self.i, (int, np.integer))):
            raise TypeError("n and i must be integers")
        if not self.n >= self.i >= 2:
            raise ValueError(f"need n >= i >= 2, got n={self.n}, i={self.i}")


@dataclass
class CoalescenceDistribution:
    n: int
    i: int
    pmf: np.ndarray
    tail: np.ndarray
    p_infinity: float
    quadrature_error: float = 0.0
    clamped: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "i": self.i,
            "pmf": [float(v) for v in self.pmf],
            "tail": [float(v) for v in self.tail],
            "p_infinity": float(self.p_infinity),
            "quadrature_error": float(self.quadrature_error),
        }


def _breakpoints(model: ModelSpec, n: int) -> np.ndarray:
    # f_n(1 - t) departs from 1 once t ~ d**-n, d the largest offspring count
    d = max(model.offspring.max_support, 2)
    return geometric_breakpoints(0.0, 1.0, math.ceil(n * math.log2(d)) + 10)


class _Integrands:
    """Shared per-node quantities for one query, evaluated on an array of nodes."""

    def __init__(self, q: CoalescenceQuery, z):
        f, g = q.model.offspring, q.model.immigration
        n, i = q.n, q.i
        z = np.asarray(z, dtype=float)
        self.q = q
        self.z = z
        jets = iterate_pgf_all(f, n, z, i)
        # index l-1 holds f_l
        self.F = np.array([j.coeffs[0] for j in jets]).reshape((n,) + z.shape)
        self.D = np.array([j.coeffs[i] for j in jets]).reshape((n,) + z.shape) * math.factorial(i)
        self.G = g(self.F)
        self.Gp = g.derivative(self.F)
        self.weight = (1.0 - z) ** (i - 1)
        ones = np.ones((1,) + z.shape)
        self.prefix = np.cumprod(np.concatenate([ones, self.G]), axis=0)  # prefix[j] = prod_{l<=j}
        self.suffix = np.cumprod(np.concatenate([ones, self.G[::-1]]), axis=0)[::-1]  # suffix[j] = prod_{l>j}

    def immigrant(self, k: int):
        """k-th summand integrand, without the 1/(i-1)! factor."""
        others = self.prefix[k - 1] * self.suffix[k]
        return self.weight * self.D[k - 1] * self.Gp[k - 1] * others

    def first(self, m: int):
        """Generation-m ancestor term, without the 1/(i-1)! factor."""
        if m == 0:
            return np.zeros_like(self.z)
        n = self.q.n
        y = self.F[n - m - 1]
        dphi = population_pgf_jet(self.q.model.offspring, self.q.model.immigration, m, y, 1).coeffs[1]
        return self.weight * self.D[n - m - 1] * dphi * self.prefix[n - m]


def population_pgf_jet(f: DistSpec, g: DistSpec, m: int, y, order: int):
    """Jet of ``phi_m(y) = prod_{l=1..m} g(f_l(y))`` at ``y``."""
    out = jet_constant(jet_variable(y, order), 1.0)
    gc = g.coefficients
    for fl in iterate_pgf_all(f, m, y, order):
        out = out * apply_poly(gc, fl)
    return out


def integrand_tail(q: CoalescenceQuery, m: int, z):
    if not 0 <= m < q.n:
        raise ValueError(f"need 0 <= m < n, got m={m}")
    return _Integrands(q, z).first(m)


def integrand_immigrant_term(q: CoalescenceQuery, k: int, z):
    if not 1 <= k <= q.n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    return _Integrands(q, z).immigrant(k)


def _integrals(q: CoalescenceQuery, firsts, immigrants, tol):
    """Integrate the requested first-term (by m) and immigrant (by k) integrands together."""
    firsts, immigrants = list(firsts), list(immigrants)

    def func(z):
        it = _Integrands(q, z)
        rows = [it.first(m) for m in firsts] + [it.immigrant(k) for k in immigrants]
        return np.array(rows)

    if not firsts and not immigrants:
        return {}, {}, 0.0
    vals, errs = integrate(func, _breakpoints(q.model, q.n), tol=tol)
    scale = 1.0 / math.factorial(q.i - 1)
    nf = len(firsts)
    first_vals = {m: vals[j] * scale for j, m in enumerate(firsts)}
    imm_vals = {k: vals[nf + j] * scale for j, k in enumerate(immigrants)}
    return first_vals, imm_vals, float(errs.sum() * scale)


def _check_prob(name, value):
    if value < -PROB_SLACK or value > 1 + PROB_SLACK:
        raise QuadratureFailure(f"{name} = {value!r} is not a probability")
    if value < 0.0 or value > 1.0:
        log.info("clamping %s = %r into [0, 1]", name, value)
    return min(max(value, 0.0), 1.0)


def prob_infinity(q: CoalescenceQuery, tol: float = QUAD_TOL) -> float:
    """P(X = inf): the sampled individuals descend from different immigrants."""
    _, imm, _ = _integrals(q, [], range(1, q.n + 1), tol)
    return _check_prob("p_infinity", 1.0 - math.fsum(imm[k] for k in range(1, q.n + 1)))


def prob_tail(q: CoalescenceQuery, m: int, tol: float = QUAD_TOL) -> float:
    """P(m <= X < inf)."""
    if not 0 <= m < q.n:
        raise ValueError(f"need 0 <= m < n, got m={m}")
    firsts = [m] if m > 0 else []
    first, imm, _ = _integrals(q, firsts, range(1, q.n - m + 1), tol)
    total = first.get(m, 0.0) + math.fsum(imm[k] for k in range(1, q.n - m + 1))
    return _check_prob(f"tail[{m}]", total)


def full_distribution(q: CoalescenceQuery, tol: float = QUAD_TOL) -> CoalescenceDistribution:
    n = q.n
    first, imm, qerr = _integrals(q, range(1, n), range(1, n + 1), tol)
    raw_tail = np.array([first.get(m, 0.0) + math.fsum(imm[k] for k in range(1, n - m + 1)) for m in range(n)])
    p_inf = 1.0 - raw_tail[0]
    tail = np.array([_check_prob(f"tail[{m}]", v) for m, v in enumerate(raw_tail)])
    p_inf = _check_prob("p_infinity", p_inf)
    pmf = tail - np.append(tail[1:], 0.0)
    clamped = []
    for m, v in enumerate(pmf):
        if v < -PMF_CLAMP:
            raise QuadratureFailure(f"pmf[{m}] = {v!r} is negative beyond quadrature noise")
        if v < 0.0:
            log.info("clamping pmf[%d] = %r to 0", m, v)
            clamped.append(m)
            pmf[m] = 0.0
    return CoalescenceDistribution(n=n, i=q.i, pmf=pmf, tail=tail, p_infinity=p_inf,
                                   quadrature_error=qerr, clamped=clamped)


def falling_factorial_expectation(phi: DistSpec, h, n: int, partition, tol: float = QUAD_TOL) -> float:
    """E[(Y_1)_{i_1} ... (Y_j)_{i_j} / (Y_1 + ... + Y_n + Z)_i] for i.i.d. ``Y ~ phi`` and ``Z ~ h``.

    ``h`` is a polynomial coefficient array (index = power) or a ``DistSpec``;
    ``Z`` may put mass at zero. Terms with a vanishing denominator count as 0.
    """
    parts = [int(p) for p in partition]
    if not parts or min(parts) < 1:
        raise ValueError("partition entries must be >= 1")
    j, i = len(parts), sum(parts)
    if j > n:
        raise ValueError(f"partition has {j} parts but only {n} variables")
    hc = np.asarray(h.coefficients if isinstance(h, DistSpec) else h, dtype=float)
    pc = phi.coefficients
    top = max(parts)

    def func(z):
        x = jet_variable(z, top)
        pj = apply_poly(pc, x)
        val = (1.0 - z) ** (i - 1) * pj.coeffs[0] ** (n - j) * np.polynomial.polynomial.polyval(z, hc)
        for p in parts:
            val = val * pj.coeffs[p] * math.factorial(p)
        return val[None, :]

    d = max(phi.max_support, len(hc) - 1, 2)
    vals, _ = integrate(func, geometric_breakpoints(0.0, 1.0, math.ceil(math.log2(d)) + 4), tol=tol)
    return float(vals[0]) / math.factorial(i - 1)
