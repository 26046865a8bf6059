"""Poisson equation ``(I - P) u = f - E_pi f`` for a homogeneous kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import build_homogeneous
from .errors import DimensionError, NHMCError
from .exact import variance_of_sum
from .kernels import Distribution, StochasticKernel, contraction, oscillation, total_variation

SERIES_TOL = 1e-14
MAX_TERMS = 10 ** 6


class NonContractingError(NHMCError, ValueError):
    """delta(P) = 1: the resolvent series is not guaranteed to converge."""


def invariant_distribution(P, tol=SERIES_TOL, max_iter=MAX_TERMS) -> Distribution:
    """Power iteration from the uniform law until successive iterates are ``tol`` apart in TV."""
    P = StochasticKernel(P).matrix
    mu = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = mu @ P
        if total_variation(nxt, mu) <= tol:
            return Distribution(nxt / nxt.sum(), tol=1e-10)
        mu = nxt
    raise NonContractingError("power iteration did not converge")


@dataclass(frozen=True, eq=False)
class PoissonSolution:
    """``u`` solves the Poisson equation; ``q(x) = E[xi^2 | X = x]``; ``V0 = E_pi q``."""

    u: np.ndarray
    invariant: Distribution
    fbar: np.ndarray
    q: np.ndarray
    V0: float
    terms: int

    def residual(self, P) -> float:
        P = np.asarray(StochasticKernel(P).matrix)
        return float(np.abs(self.u - P @ self.u - self.fbar).max())


def solve_poisson(P, f) -> PoissonSolution:
    """Solve by the Neumann series ``u = sum_i P^i fbar``.

    Terms are added until one has oscillation at most 1e-14.  Requires
    ``delta(P) < 1`` so the series converges geometrically.
    """
    K = StochasticKernel(P)
    P = K.matrix
    f = np.asarray(f, dtype=float)
    if f.shape != (P.shape[0],):
        raise DimensionError(f"function has shape {f.shape}, kernel has {P.shape[0]} states")
    if contraction(K) >= 1.0:
        raise NonContractingError("delta(P) = 1; the Poisson series may diverge")
    pi = invariant_distribution(K)
    fbar = f - pi.expect(f)
    if np.ptp(f) == 0.0:
        fbar = np.zeros_like(f)
    u = fbar.copy()
    term = fbar
    terms = 1
    while oscillation(term) > SERIES_TOL and terms < MAX_TERMS:
        term = P @ term
        u += term
        terms += 1
    # pin the additive constant against round-off drift: E_pi u = 0
    u -= pi.expect(u)
    Pu = P @ u
    q = (P * (u[None, :] - Pu[:, None]) ** 2).sum(axis=1)
    return PoissonSolution(u=u, invariant=pi, fbar=fbar, q=q, V0=max(pi.expect(q), 0.0), terms=terms)


@dataclass(frozen=True)
class GrowthTable:
    """``V(S_n)/n`` against ``V0``; ``C`` is the smallest constant with ``|ratio - V0| <= C/n``."""

    ns: tuple
    ratios: tuple
    V0: float
    C: float

    def rows(self):
        return list(zip(self.ns, self.ratios))


def verify_variance_growth(P, f, ns, initial=None) -> GrowthTable:
    """Exact ``V(S_n)/n`` for the homogeneous chain, started from ``initial``
    (default: the invariant law)."""
    sol = solve_poisson(P, f)
    if initial is None:
        initial = sol.invariant.weights
    ratios = []
    C = 0.0
    for n in ns:
        r = variance_of_sum(build_homogeneous(P, f, int(n), initial)) / n
        ratios.append(r)
        C = max(C, n * abs(r - sol.V0))
    return GrowthTable(tuple(int(n) for n in ns), tuple(ratios), sol.V0, C)


def truncated_resolvent(P, fbar, n: int) -> np.ndarray:
    """``fbar + P fbar + ... + P^(n-1) fbar``."""
    P = np.asarray(StochasticKernel(P).matrix)
    out = np.array(fbar, dtype=float)
    term = out.copy()
    for _ in range(n - 1):
        term = P @ term
        out += term
    return out


def resolvent_gap_bound(P, f, n: int) -> float:
    """Sup-distance allowed between ``Z_1`` of length ``n`` and ``u``: ``2C (1-alpha)^n / alpha``."""
    a = 1.0 - contraction(P)
    C = float(np.abs(f).max())
    return 2.0 * C * (1.0 - a) ** n / a if a > 0 else math.inf
