"""
Contraction coefficients of finite kernels
==========================================

How fast a kernel forgets its starting state, and the estimates that follow.
"""

import numpy as np

from nhmc.kernels import (PairMeasure, apply_function, check_covariance_inequality, check_pair_bound, compose,
                          contraction, flip_kernel, oscillation, reverse_kernel, total_variation)

# The flip kernel Q(p) moves to the other state with probability p.
# Its contraction coefficient is |1 - 2p|: Q(1/2) forgets in one step,
# Q(0) and Q(1) never forget.
for p in (0.0, 0.1, 0.3, 0.5, 0.9):
    print(f"delta(Q({p})) = {contraction(flip_kernel(p)):.2f}")

# Composing kernels multiplies the coefficients at most.
A, B = flip_kernel(0.2), np.array([[0.5, 0.3, 0.2], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]])
C = np.array([[0.7, 0.2, 0.1], [0.2, 0.2, 0.6], [0.4, 0.5, 0.1]])
print("delta(BC) =", round(contraction(compose(B, C)), 4), "<=", round(contraction(B) * contraction(C), 4))

# Two starting laws pushed through the same kernel get closer by the factor delta.
lam, mu = np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.2, 0.8])
print("TV before", total_variation(lam, mu), "after", round(total_variation(lam @ B, mu @ B), 4))

# Dually, the kernel shrinks the oscillation (max - min) of a function.
u = np.array([3.0, -1.0, 0.5])
print("Osc(u) =", oscillation(u), " Osc(Bu) =", round(oscillation(apply_function(B, u)), 4))

# Reversing B under a starting law alpha and composing gives a kernel that is
# self-adjoint for alpha and contracts no more slowly than B.
alpha = np.array([0.2, 0.5, 0.3])
Q = compose(B, reverse_kernel(alpha, B))
print("delta(B reversed) =", round(contraction(Q), 4))

# The pair (X1, X2) with X1 ~ alpha and X2 | X1 ~ B satisfies a covariance
# inequality with constant sqrt(delta) and a lower bound on E[(f - g)^2].
pair = PairMeasure.from_kernel(alpha, B)
f, g = np.array([1.0, 0.0, 2.0]), np.array([0.0, 1.0, 1.0])
cov = check_covariance_inequality(pair, f, g)
print(f"|cov| = {cov.lhs:.4f} <= {cov.rhs:.4f}")
for c in check_pair_bound(pair, f, g):
    print(f"{c.name}: {c.lhs:.4f} >= {c.rhs:.4f}")
