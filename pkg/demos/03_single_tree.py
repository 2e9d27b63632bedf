"""Grow one family tree, then look at it from every founding generation.

The quenched probability conditions on the realized tree; averaging it over
many trees recovers the exact (annealed) law.
"""
import numpy as np

from gwcoal import (CoalescenceQuery, annealed_estimate, full_distribution, quenched_prob, sample_coalescence,
                    simulate, validate)

model = validate({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5})
n = 8
state = simulate(model, n, seed=2026, keep_ancestry=True)
print(f"generation {n} holds {state.population} individuals")
print("immigrants per generation:", state.immigration_log.tolist())
print("lines founded by immigrants:", sorted(state.counts.tolist(), reverse=True))

draws = sample_coalescence(state, 2, rng=1, size=20_000)
exact = full_distribution(CoalescenceQuery(model, n, 2))
print("\n  m  quenched  sampled   annealed")
for m in range(n):
    q = quenched_prob(state, 2, m=m)
    freq = np.mean((draws >= m) & np.isfinite(draws))
    print(f"  {m}  {q:.5f}   {freq:.5f}   {exact.tail[m]:.5f}")

est = annealed_estimate(model, n, 2, 2, 50_000, seed=3)
print(f"\naveraging over 50000 trees: {est.mean:.5f} +/- {est.std_error:.5f} (exact {exact.tail[2]:.5f})")
