"""
Poisson equation for a homogeneous chain
========================================

For one fixed kernel P the centered summand has a bounded solution u of
(I - P) u = f - pi(f), and V(S_n)/n approaches the asymptotic variance V0
at rate 1/n.
"""

import numpy as np

from nhmc.poisson import solve_poisson, verify_variance_growth

P = np.array([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4]])
f = np.array([1.0, -2.0, 0.5])

sol = solve_poisson(P, f)
print("invariant law:", np.round(sol.invariant.weights, 6))
print("u =", np.round(sol.u, 6), " residual", sol.residual(P))
print("V0 =", sol.V0)

g = verify_variance_growth(P, f, [10, 100, 1000, 10 ** 4])
for n, r in g.rows():
    print(f"n = {n:>6}: V(S_n)/n = {r:.10f}   n |V(S_n)/n - V0| = {n * abs(r - g.V0):.6f}")
