"""Three independent references for the exact engine.

* closed forms for deterministic l-ary trees with k immigrants per generation;
* a nested-sum formula for binary offspring with immigration (z^2 + z)/2;
* exhaustive enumeration of every tree of a small model, in rational arithmetic.
"""
from gwcoal import CoalescenceQuery, full_distribution, lnary_model, validate
from gwcoal.oracles import (LnaryParams, binary_random_model, binary_random_tail, enumerate_exact,
                            lnary_tail)

print("deterministic trees")
for l, k in [(2, 1), (3, 2)]:
    d = full_distribution(CoalescenceQuery(lnary_model(l, k), 6, 3))
    exact = [lnary_tail(LnaryParams(l, k), 6, m, 3, exact=True) for m in range(6)]
    print(f"  l={l} k={k}  tail(1) = {exact[1]}  engine error {max(abs(a - float(b)) for a, b in zip(d.tail, exact)):.1e}")

print("\nbinary offspring, one or two immigrants")
model = binary_random_model()
for n, m, i in [(6, 2, 2), (8, 3, 3), (10, 5, 2)]:
    eng = full_distribution(CoalescenceQuery(model, n, i)).tail[m]
    print(f"  n={n:<2d} m={m} i={i}  engine {eng:.12f}  nested sum {binary_random_tail(n, m, i):.12f}")

# The innermost sum of the nested formula can also be run over a wider index
# range; enumeration shows that version counts some ancestors twice.
n, m, i = 4, 2, 3
print(f"\n  n={n} m={m} i={i}: enumeration {enumerate_exact(model, n, i, m, exact=True)}")
print(f"    = {enumerate_exact(model, n, i, m):.10f}; wide index range gives "
      f"{binary_random_tail(n, m, i, wide_k_range=True):.10f}")

print("\nrandom offspring {1, 2}, one immigrant per generation")
coin = validate({1: 0.5, 2: 0.5}, {1: 1.0})
for n in (2, 3):
    d = full_distribution(CoalescenceQuery(coin, n, 2))
    for m in (0, 1):
        print(f"  n={n} m={m}  enumeration {enumerate_exact(coin, n, 2, m, exact=True)}  engine {d.tail[m]:.15f}")
