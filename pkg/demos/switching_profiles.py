"""
Slow and fast switching
=======================

Homogeneous two-state chains with switching probability 1/n or 1 - 1/n,
counting visits to the first state.
"""

from nhmc.montecarlo import CaseABProfile, case_ab_profiles

ns = [2 ** k for k in range(6, 14)]
prof = case_ab_profiles(ns, count=2000, seed=3)

# Slow switching: the count grows like n, and V(T_n)/n^2 converges.
# Fast switching: the chain alternates, and V(T_n) itself converges.
print(f"{'n':>6} {'V/n^2 (slow)':>14} {'V (fast)':>10}")
for n, a, b in zip(prof.ns, prof.scaled_var_a, prof.var_b):
    print(f"{n:>6} {a:>14.8f} {b:>10.6f}")

# Differences halve with each doubling, so a geometric tail gives the limits.
for name, seq in (("slow", prof.scaled_var_a), ("fast", prof.var_b)):
    limit, err = CaseABProfile.limit_estimate(seq)
    print(f"{name} limit {limit:.6f} +- {err:.1e}")

# The slow count divided by n spreads over [0, 1]; the fast count minus
# (n + 1)/2 sits on a few half-integers.
print("T_n/n histogram:", prof.hist_a.tolist())
print("T_n - (n+1)/2:", dict(sorted(prof.hist_b.items())))
print("mass within 1 of the centre:", sum(c for k, c in prof.hist_b.items() if abs(k) <= 1) / 2000)
