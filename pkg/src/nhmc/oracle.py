"""Brute-force expectations over every path of a short chain.

This is the ground truth the exact engine is tested against, so it shares
nothing with it beyond the :class:`~nhmc.chain.ChainSpec` container.
"""

from __future__ import annotations

import math

import numpy as np

from .chain import ChainSpec
from .errors import EnumerationLimitError

PATH_LIMIT = 10 ** 7
CHUNK = 1 << 16


def enumerate_paths(spec: ChainSpec, limit: int = PATH_LIMIT, chunk: int = CHUNK):
    """Yield ``(paths, weights)`` blocks covering all ``S**n`` paths.

    ``paths`` is an ``(m, n)`` integer array of state indices, ``weights``
    the matching path probabilities ``init(x_0) prod_t K_t(x_t, x_{t+1})``.
    """
    S, n = spec.n_states, spec.n
    total = S ** n
    if total > limit:
        raise EnumerationLimitError(f"{S}^{n} = {total} paths exceeds the enumeration limit {limit}")
    powers = S ** np.arange(n - 1, -1, -1)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        paths = (idx[:, None] // powers[None, :]) % S
        w = spec.initial[paths[:, 0]].copy()
        for t in range(n - 1):
            w *= spec.kernels[t][paths[:, t], paths[:, t + 1]]
        yield paths, w


def path_sums(spec: ChainSpec, paths) -> np.ndarray:
    """``S_n`` along each path."""
    return spec.functions[np.arange(spec.n)[None, :], paths].sum(axis=1)


def path_expectation(spec: ChainSpec, statistic, limit: int = PATH_LIMIT) -> float:
    """``E[statistic(path)]`` summed exactly over all paths.

    ``statistic`` maps an ``(m, n)`` array of paths to ``m`` values.
    Block partial sums are combined with compensated summation.
    """
    parts = []
    for paths, w in enumerate_paths(spec, limit):
        parts.append(math.fsum(np.asarray(statistic(paths), dtype=float) * w))
    return math.fsum(parts)


def path_moments(spec: ChainSpec, limit: int = PATH_LIMIT):
    """``(E[S_n], V(S_n))`` by enumeration."""
    mean = path_expectation(spec, lambda p: path_sums(spec, p), limit)
    second = path_expectation(spec, lambda p: (path_sums(spec, p) - mean) ** 2, limit)
    return mean, second


def path_marginals(spec: ChainSpec, limit: int = PATH_LIMIT) -> np.ndarray:
    mu = np.zeros((spec.n, spec.n_states))
    for paths, w in enumerate_paths(spec, limit):
        for t in range(spec.n):
            np.add.at(mu[t], paths[:, t], w)
    return mu


def conditional_expectation(spec: ChainSpec, t: int, statistic, limit: int = PATH_LIMIT) -> np.ndarray:
    """``E[statistic(X_t, ..., X_{n-1}) | X_t = x]`` for every state ``x``.

    Restarts the chain at ``t`` from each point mass, so states with zero
    marginal mass are covered too.
    """
    out = np.empty(spec.n_states)
    for x in range(spec.n_states):
        e = np.zeros(spec.n_states)
        e[x] = 1.0
        out[x] = path_expectation(spec.restart(t, e), statistic, limit)
    return out
