"""Truncated Taylor expansions ("jets") for derivatives of iterated p.g.f.s.

A jet of order ``r`` at base point ``z`` stores ``h(z), h'(z)/1!, ..., h^(r)(z)/r!``.
Coefficients may carry trailing batch dimensions so one jet can describe the
same function at many base points at once (one per quadrature node).
"""
from __future__ import annotations

import math

import numpy as np

from .errors import BasePointMismatch, OrderExceeded


class Jet:
    __slots__ = ("base_point", "coeffs")

    def __init__(self, base_point, coeffs):
        self.base_point = np.asarray(base_point, dtype=float)
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.ndim == 0 or self.coeffs.shape[0] < 1:
            raise ValueError("a jet needs at least one coefficient")

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def value(self):
        return self.coeffs[0]

    def _check(self, other: "Jet"):
        if self.order != other.order:
            raise BasePointMismatch(f"jet orders differ: {self.order} vs {other.order}")
        if self.base_point.shape != other.base_point.shape or not np.array_equal(self.base_point, other.base_point):
            raise BasePointMismatch("jets expanded at different base points")

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet(self.base_point, self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0] = c[0] + other
        return Jet(self.base_point, c)

    __radd__ = __add__

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.base_point, self.coeffs * other)
        self._check(other)
        a, b = self.coeffs, other.coeffs
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(a.shape[0]):
            for j in range(k + 1):
                out[k] += a[j] * b[k - j]
        return Jet(self.base_point, out)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Jet(base_point={self.base_point!r}, coeffs={self.coeffs!r})"


def jet_variable(z, order: int) -> Jet:
    """The identity function expanded at ``z``."""
    if order < 0:
        raise ValueError("order must be >= 0")
    z = np.asarray(z, dtype=float)
    coeffs = np.zeros((order + 1,) + z.shape)
    coeffs[0] = z
    if order >= 1:
        coeffs[1] = 1.0
    return Jet(z, coeffs)


def jet_constant(like: Jet, value) -> Jet:
    coeffs = np.zeros_like(like.coeffs)
    coeffs[0] = value
    return Jet(like.base_point, coeffs)


def jet_add(a: Jet, b: Jet) -> Jet:
    return a + b


def jet_mul(a: Jet, b: Jet) -> Jet:
    return a * b


def apply_poly(p, x: Jet) -> Jet:
    """Evaluate the polynomial with coefficients ``p`` (index = power) on ``x`` by Horner."""
    p = np.asarray(p, dtype=float)
    degree = len(p) - 1
    while degree > 0 and p[degree] == 0.0:
        degree -= 1
    result = jet_constant(x, p[degree])
    for c in p[degree - 1::-1] if degree > 0 else ():
        result = result * x
        if c != 0.0:
            result = result + c
    return result


def iterate_pgf(f, n: int, z, order: int) -> Jet:
    """Jet of the ``n``-fold composition ``f_n`` at ``z``; ``f_0`` is the identity."""
    if n < 0:
        raise ValueError("n must be >= 0")
    coeffs = f.coefficients if hasattr(f, "coefficients") else f
    x = jet_variable(z, order)
    for _ in range(n):
        x = apply_poly(coeffs, x)
    return x


def iterate_pgf_all(f, n: int, z, order: int) -> list[Jet]:
    """Jets of ``f_1, ..., f_n`` at ``z`` (index 0 holds ``f_1``)."""
    coeffs = f.coefficients if hasattr(f, "coefficients") else f
    x = jet_variable(z, order)
    out = []
    for _ in range(n):
        x = apply_poly(coeffs, x)
        out.append(x)
    return out


def compose(outer: Jet, inner: Jet) -> Jet:
    """Jet of ``outer(inner(.))`` given ``outer`` expanded at ``inner``'s value."""
    if outer.order != inner.order:
        raise BasePointMismatch("jet orders differ")
    if not np.allclose(outer.base_point, inner.value, rtol=0, atol=0):
        raise BasePointMismatch("outer jet must be expanded at the inner jet's value")
    delta = Jet(inner.base_point, inner.coeffs.copy())
    delta.coeffs[0] = 0.0
    return apply_poly(outer.coeffs, delta)


def derivative(x: Jet, j: int) -> np.ndarray:
    if j < 0 or j > x.order:
        raise OrderExceeded(f"derivative of order {j} requested from a jet of order {x.order}")
    return x.coeffs[j] * math.factorial(j)
