"""Normalized population sizes and the large-n limit of the pair law.

X_n rescales the whole population by mu^-n, V_n the squared immigrant-line
sizes by mu^-2n. For a pair sampled far in the future the probability of
meeting at or after generation m tends to E[(sum W^2 + V) / (sum W + X)^2].
"""
import numpy as np

from gwcoal import CoalescenceQuery, full_distribution, limit_law_estimate, lnary_model, martingale_means, \
    martingale_samples, validate
from gwcoal.oracles import LnaryParams, lnary_limit_tail

model = validate({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5})
for n in (5, 10, 15):
    s = martingale_samples(model, n, 20_000, seed=n)
    ex, ev = martingale_means(model, n)
    print(f"n={n:<2d} mean X {s[:, 1].mean():.4f} (closed form {ex:.4f})  "
          f"mean V {s[:, 2].mean():.4f} ({ev:.4f})  max V/X^2 {np.max(s[:, 2] / s[:, 1] ** 2):.3f}")

print("\nlimit of P(m <= X < inf) for pairs")
for l, k in [(2, 1), (3, 2)]:
    tree = lnary_model(l, k)
    for m in (0, 1, 2):
        est = limit_law_estimate(tree, m, n=20, replicates=200, seed=0)
        print(f"  l={l} k={k} m={m}: estimate {est.mean:.6f}, closed form {lnary_limit_tail(LnaryParams(l, k), m):.6f}")
    gaps = [abs(full_distribution(CoalescenceQuery(tree, n, 2)).tail[0] - lnary_limit_tail(LnaryParams(l, k), 0))
            for n in (4, 8, 12)]
    print("    finite-n gap at n = 4, 8, 12:", ", ".join(f"{g:.1e}" for g in gaps))

est = limit_law_estimate(model, 1, n=20, replicates=20_000, seed=5)
print(f"\nrandom model, m=1: {est.mean:.4f} +/- {est.std_error:.4f}; "
      f"exact at n=14: {full_distribution(CoalescenceQuery(model, 14, 2)).tail[1]:.4f}")
