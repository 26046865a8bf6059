"""
The block chain at exponents 1/4 and 1/3
========================================

Within each block of length b = floor(1/a) the two-state chain either
switches rarely (first block, rate a) or almost always (later blocks,
rate 1 - a); a fair coin separates the blocks.  With a = n^-e the normal
limit holds for e = 1/4, and at e = 1/3 the condition value stays of order
one.
"""

import numpy as np

from nhmc.chain import dobrushin_family
from nhmc.exact import dobrushin_gate
from nhmc.montecarlo import (block_chain_law, fit_normal, ks_null_quantile, lattice_excess_kurtosis,
                             lattice_ks_distance, sample)

ns = [10 ** 3, 10 ** 4, 10 ** 5]

# The condition value C^2 / (alpha^3 sum V) decays like n^-1/4 for e = 1/4
# and is flat for e = 1/3.
for e in (0.25, 1 / 3):
    g = dobrushin_gate(dobrushin_family(e), ns)
    print(f"e = {e:.3f}:", [round(r.condition_value, 4) for r in g.rows], "->", g.verdict())

# The blocks are independent, so the law of the visit count is a convolution
# of block laws and its distance to the normal can be computed exactly.
for e in (0.25, 1 / 3):
    for n in ns:
        law = block_chain_law(n, n ** -e)
        print(f"e = {e:.3f} n = {n:>6}: exact KS {lattice_ks_distance(law):.4f}"
              f"  excess kurtosis {lattice_excess_kurtosis(law):+.4f}")

# Sampling adds noise of the order of the KS null quantile, which at 10^4
# paths is larger than the exact distance for either exponent.
count = 10 ** 4
print("99% KS null quantile at", count, "paths:", round(ks_null_quantile(count), 4))
for e in (0.25, 1 / 3):
    fit = fit_normal(sample(dobrushin_family(e)(10 ** 4), count, seed=1))
    print(f"e = {e:.3f} n = 10^4, sampled: KS {fit.ks_statistic:.4f} kurtosis {fit.excess_kurtosis:+.4f}")
