"""Adaptive Gauss-Legendre quadrature for vector-valued integrands on [a, b]."""
from __future__ import annotations

import numpy as np

from .errors import QuadratureFailure

_RULES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _rule(points: int):
    if points not in _RULES:
        _RULES[points] = np.polynomial.legendre.leggauss(points)
    return _RULES[points]


def geometric_breakpoints(a: float, b: float, levels: int) -> np.ndarray:
    """Breakpoints ``b - (b-a)/2**j`` that resolve a boundary layer at ``b``."""
    levels = max(1, min(int(levels), 52))
    pts = b - (b - a) * 0.5 ** np.arange(levels + 1)
    return np.append(pts, b)


def integrate(func, breakpoints, tol: float = 1e-12, points: int = 20, max_panels: int = 20000):
    """Integrate ``func`` over the span of ``breakpoints``.

    ``func(z)`` takes a 1-d array of nodes and returns an array of shape
    ``(ncomp, len(z))``. Panels are bisected until the summed error estimate of
    every component is below ``tol``. Returns ``(values, errors)``.
    """
    x, w = _rule(points)
    bp = np.asarray(breakpoints, dtype=float)
    lo, hi = bp[:-1], bp[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]

    def panel_sums(lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        vals = np.asarray(func(nodes), dtype=float)
        vals = vals.reshape(vals.shape[0], len(lo), points)
        return (vals * w).sum(axis=2) * half

    def estimate(lo, hi):
        mid = 0.5 * (lo + hi)
        coarse = panel_sums(lo, hi)
        fine_halves = panel_sums(np.concatenate([lo, mid]), np.concatenate([mid, hi]))
        fine = fine_halves[:, : len(lo)] + fine_halves[:, len(lo):]
        return fine, np.abs(fine - coarse)

    val, err = estimate(lo, hi)
    while True:
        total_val = val.sum(axis=1)
        total_err = err.sum(axis=1)
        if not np.all(np.isfinite(total_val)):
            raise QuadratureFailure("integrand produced non-finite values")
        if np.all(total_err <= tol):
            return total_val, total_err
        if len(lo) > max_panels:
            raise QuadratureFailure(f"quadrature did not reach tolerance {tol:g}; error estimate {total_err.max():.3g}")
        panel_err = err.max(axis=0)
        split = panel_err >= 0.1 * panel_err.max()
        # bisection cannot move nodes once a panel is a few ulps wide
        split &= (hi - lo) > 4 * np.spacing(np.maximum(np.abs(lo), np.abs(hi)))
        if not split.any():
            raise QuadratureFailure(f"quadrature stalled at error estimate {total_err.max():.3g}")
        slo, shi = lo[split], hi[split]
        smid = 0.5 * (slo + shi)
        new_lo = np.concatenate([slo, smid])
        new_hi = np.concatenate([smid, shi])
        new_val, new_err = estimate(new_lo, new_hi)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[:, keep], new_val], axis=1)
        err = np.concatenate([err[:, keep], new_err], axis=1)
