"""Exact coalescence-time law for a random binary tree with random immigration.

Prints P(X = m) for every generation m, the chance that the sample never
meets, and how the law shifts when more individuals are sampled.
"""
import numpy as np

from gwcoal import CoalescenceQuery, full_distribution, validate

model = validate({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5})
print(f"offspring mean {model.mu}, variance {model.sigma2}, immigration mean {model.lam}")

n = 10
for i in (2, 3, 5):
    d = full_distribution(CoalescenceQuery(model, n, i))
    print(f"\ni = {i} individuals sampled at generation {n}")
    print("  m   P(X = m)    P(X >= m, finite)")
    for m in range(n):
        print(f"  {m:<3d} {d.pmf[m]:.8f}  {d.tail[m]:.8f}")
    print(f"  inf {d.p_infinity:.8f}")
    print(f"  total mass {d.pmf.sum() + d.p_infinity:.15f}, quadrature error bound {d.quadrature_error:.1e}")

# Larger samples need a common ancestor further back, so every tail shrinks.
t2 = full_distribution(CoalescenceQuery(model, n, 2)).tail
t5 = full_distribution(CoalescenceQuery(model, n, 5)).tail
print("\ntail ratio i=5 / i=2:", np.round(t5 / t2, 4))
