"""Non-homogeneous chains of fixed length and triangular arrays of them.

Time is 0-based in code: ``X_0, ..., X_{n-1}``, ``kernels[t]`` moves
``X_t -> X_{t+1}`` and ``functions[t]`` is evaluated at ``X_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, InvalidKernelError
from .kernels import ROW_TOL, StochasticKernel, _as_weights, contraction_stack


def _freeze(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """One chain of length ``n``.

    Parameters
    ----------
    states : sequence of str
        State labels; their order fixes the matrix indexing.
    initial : (S,) array_like
        Law of ``X_0``.
    kernels : (n-1, S, S) array_like
        Transition matrices, each row-stochastic.
    functions : (n, S) array_like
        ``functions[t][x]`` is the summand at time ``t`` in state ``x``.
    """

    states: tuple
    initial: np.ndarray
    kernels: np.ndarray
    functions: np.ndarray
    description: str = field(default="", compare=False)

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        S = len(states)
        if S < 1:
            raise DimensionError("a chain needs at least one state")
        if len(set(states)) != S:
            raise DimensionError(f"duplicate state labels in {states}")
        initial = _as_weights(self.initial, what="initial distribution")
        if initial.size != S:
            raise DimensionError(f"initial distribution has {initial.size} entries for {S} states")
        F = np.array(self.functions, dtype=float)
        if F.ndim != 2 or F.shape[1] != S or F.shape[0] < 1:
            raise DimensionError(f"functions must have shape (n, {S}), got {F.shape}")
        n = F.shape[0]
        if len(self.kernels) == 0:
            K = np.zeros((0, S, S))
        else:
            K = np.array([np.asarray(k, dtype=float) for k in self.kernels], dtype=float)
        if K.shape != (n - 1, S, S):
            raise DimensionError(f"expected {n - 1} kernels of shape ({S}, {S}), got {K.shape}")
        if not np.all(np.isfinite(F)):
            raise InvalidKernelError("functions have non-finite values")
        K = _check_stack(K)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "kernels", _freeze(K))
        object.__setattr__(self, "functions", _freeze(F))

    @property
    def n(self) -> int:
        return self.functions.shape[0]

    @property
    def n_states(self) -> int:
        return len(self.states)

    def kernel(self, t) -> StochasticKernel:
        return StochasticKernel(self.kernels[t])

    def restart(self, t, initial) -> "ChainSpec":
        """The chain from time ``t`` on, started afresh from ``initial``."""
        return ChainSpec(self.states, initial, self.kernels[t:], self.functions[t:])

    def with_functions(self, functions) -> "ChainSpec":
        return ChainSpec(self.states, self.initial, self.kernels, functions, self.description)

    def __eq__(self, other):
        if not isinstance(other, ChainSpec):
            return NotImplemented
        return (
            self.states == other.states
            and np.array_equal(self.initial, other.initial)
            and np.array_equal(self.kernels, other.kernels)
            and np.array_equal(self.functions, other.functions)
        )

    __hash__ = None


def _check_stack(K, tol=ROW_TOL):
    if not np.all(np.isfinite(K)):
        raise InvalidKernelError("kernels have non-finite entries")
    if np.any(K < -tol):
        t, x, y = np.argwhere(K < -tol)[0]
        raise InvalidKernelError(f"kernel {t} entry ({x}, {y}) is negative")
    K = np.where(K < 0, 0.0, K)
    sums = K.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > tol)
    if bad.size:
        t, x = bad[0]
        raise InvalidKernelError(f"kernel {t} row {x} sums to {sums[t, x]!r}, not 1")
    return K / sums[..., None]


@dataclass(frozen=True)
class ChainScalars:
    alpha_n: float
    C_n: float
    variances: np.ndarray
    sum_variances: float

    def to_dict(self):
        return {
            "alpha_n": self.alpha_n,
            "C_n": self.C_n,
            "sum_variances": self.sum_variances,
        }


@dataclass(frozen=True)
class ArraySchemeFamily:
    """A deterministic rule ``n -> ChainSpec`` of length ``n``."""

    generator: Callable[[int], ChainSpec]
    description: str = ""

    def __call__(self, n: int) -> ChainSpec:
        spec = self.generator(n)
        if spec.n != n:
            raise DimensionError(f"family produced a chain of length {spec.n} for n={n}")
        return spec


def marginals(spec: ChainSpec) -> np.ndarray:
    """Laws of ``X_0 .. X_{n-1}`` as an ``(n, S)`` array."""
    mu = np.empty((spec.n, spec.n_states))
    mu[0] = spec.initial
    for t, K in enumerate(spec.kernels):
        mu[t + 1] = mu[t] @ K
    return mu


def step_alphas(spec: ChainSpec) -> np.ndarray:
    return 1.0 - contraction_stack(spec.kernels)


def scalars(spec: ChainSpec, mu=None) -> ChainScalars:
    """``alpha_n``, ``C_n`` and the one-time variances ``V(f_t(X_t))``.

    A chain of length one has no transitions; its ``alpha_n`` is taken as 1.
    """
    if mu is None:
        mu = marginals(spec)
    F = spec.functions
    means = np.einsum("ts,ts->t", mu, F)
    variances = np.einsum("ts,ts->t", mu, (F - means[:, None]) ** 2)
    a = float(step_alphas(spec).min()) if spec.n > 1 else 1.0
    return ChainScalars(
        alpha_n=a,
        C_n=float(np.abs(F).max()),
        variances=_freeze(variances),
        sum_variances=math.fsum(variances),
    )


def _flip(p):
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def dobrushin_block_size(a: float) -> int:
    return math.floor(1.0 / a)


def build_dobrushin_example(n: int, alpha_rule) -> ChainSpec:
    """Two-state block chain of the Bernstein-Dobrushin counterexample.

    With ``b = floor(1/a)`` and 1-based transition index ``i``: the flip
    kernel Q(a) for ``i < b``, the fair coin Q(1/2) when ``b`` divides ``i``,
    and Q(1 - a) otherwise.  Starts uniform; the summand counts visits to
    the first state.

    Parameters
    ----------
    n : int
        Chain length, at least 2.
    alpha_rule : float or callable
        Either the flip rate ``a`` itself or a map ``n -> a``; ``a`` must lie in
        ``(0, 1/2]``.
    """
    if n < 2:
        raise ValueError(f"chain length must be at least 2, got {n}")
    a = float(alpha_rule(n) if callable(alpha_rule) else alpha_rule)
    if not 0.0 < a <= 0.5:
        raise ValueError(f"flip rate must lie in (0, 1/2], got {a!r}")
    b = dobrushin_block_size(a)
    slow, coin = _flip(a), _flip(0.5)
    fast = np.array([[a, 1.0 - a], [1.0 - a, a]])
    i = np.arange(1, n)
    K = np.empty((n - 1, 2, 2))
    K[:] = fast
    K[i % b == 0] = coin
    K[i < b] = slow
    F = np.zeros((n, 2))
    F[:, 0] = 1.0
    return ChainSpec(("1", "2"), [0.5, 0.5], K, F, description=f"dobrushin example n={n} a={a!r}")


def power_rate(exponent: float) -> Callable[[int], float]:
    """``n -> min(1/2, n**-exponent)``."""

    def rule(n):
        return min(0.5, n ** -exponent)

    return rule


def dobrushin_family(exponent: float) -> ArraySchemeFamily:
    if not 0.0 < exponent < 1.0:
        raise ValueError(f"exponent must lie in (0, 1), got {exponent!r}")
    rule = power_rate(exponent)
    return ArraySchemeFamily(
        lambda n: build_dobrushin_example(n, rule),
        f"dobrushin example, a_n = min(1/2, n^-{exponent!r})",
    )


def build_homogeneous(P, f, n: int, initial=None, states=None) -> ChainSpec:
    """Time-homogeneous chain: the same kernel and summand at every step."""
    P = np.asarray(StochasticKernel(P).matrix)
    f = np.asarray(f, dtype=float)
    S = P.shape[0]
    if f.shape != (S,):
        raise DimensionError(f"function has shape {f.shape}, kernel has {S} states")
    if n < 1:
        raise ValueError(f"chain length must be at least 1, got {n}")
    if initial is None:
        initial = np.full(S, 1.0 / S)
    if states is None:
        states = tuple(str(s + 1) for s in range(S))
    K = np.broadcast_to(P, (n - 1, S, S))
    F = np.broadcast_to(f, (n, S))
    return ChainSpec(states, initial, K, F)
