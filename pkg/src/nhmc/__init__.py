"""Finite-state non-homogeneous Markov chains: contraction coefficients, exact
martingale decompositions of additive functionals, and Monte Carlo checks of
their normal approximation."""

__version__ = "0.1.0"

from .chain import (ArraySchemeFamily, ChainScalars, ChainSpec, build_dobrushin_example, build_homogeneous,
                    dobrushin_family, marginals, power_rate, scalars)
from .errors import (DegenerateError, DimensionError, EnumerationLimitError, InvalidKernelError, NHMCError,
                     TooFewSamplesError, ZeroMassError)
from .exact import analyze, decompose, dobrushin_gate, mean_of_sum, resolvent_sequence, variance_of_sum
from .kernels import (Distribution, PairMeasure, StochasticKernel, alpha, compose, contraction, flip_kernel,
                      oscillation, reverse_kernel, total_variation)
from .montecarlo import fit_normal, ks_statistic, sample
from .poisson import solve_poisson, verify_variance_growth

__all__ = [
    "ArraySchemeFamily",
    "ChainScalars",
    "ChainSpec",
    "DegenerateError",
    "DimensionError",
    "Distribution",
    "EnumerationLimitError",
    "InvalidKernelError",
    "NHMCError",
    "PairMeasure",
    "StochasticKernel",
    "TooFewSamplesError",
    "ZeroMassError",
    "alpha",
    "analyze",
    "build_dobrushin_example",
    "build_homogeneous",
    "compose",
    "contraction",
    "decompose",
    "dobrushin_family",
    "dobrushin_gate",
    "fit_normal",
    "flip_kernel",
    "ks_statistic",
    "marginals",
    "mean_of_sum",
    "oscillation",
    "power_rate",
    "resolvent_sequence",
    "reverse_kernel",
    "sample",
    "scalars",
    "solve_poisson",
    "total_variation",
    "variance_of_sum",
    "verify_variance_growth",
]
