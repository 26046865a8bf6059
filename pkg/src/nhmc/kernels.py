"""Finite stochastic matrices and their contraction coefficients.

A kernel is an ``S x S`` row-stochastic matrix (row = source state, column =
target state).  Measures act on the left (``mu @ P``), functions on the
right (``P @ u``).  The contraction coefficient is the largest total
variation distance between two rows::

    delta(P) = max_{x1, x2} 1/2 sum_y |P(x1, y) - P(x2, y)|

and ``alpha(P) = 1 - delta(P)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidKernelError, ZeroMassError

ROW_TOL = 1e-12
CHECK_TOL = 1e-10


def _as_matrix(entries, tol=ROW_TOL, what="kernel"):
    P = np.array(entries, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
        raise InvalidKernelError(f"{what} must be a non-empty square matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise InvalidKernelError(f"{what} has non-finite entries")
    if np.any(P < -tol):
        x, y = np.argwhere(P < -tol)[0]
        raise InvalidKernelError(f"{what} entry ({x}, {y}) is negative: {P[x, y]!r}")
    P[P < 0] = 0.0
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        raise InvalidKernelError(f"{what} row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
    P /= sums[:, None]
    P.setflags(write=False)
    return P


def _as_weights(weights, tol=ROW_TOL, what="distribution"):
    w = np.array(weights, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise InvalidKernelError(f"{what} must be a non-empty vector, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InvalidKernelError(f"{what} has non-finite entries")
    if np.any(w < -tol):
        raise InvalidKernelError(f"{what} has a negative entry: {w.min()!r}")
    w[w < 0] = 0.0
    total = w.sum()
    if abs(total - 1.0) > tol:
        raise InvalidKernelError(f"{what} sums to {total!r}, not 1")
    w /= total
    w.setflags(write=False)
    return w


class StochasticKernel:
    """Immutable row-stochastic matrix.

    Rows off by at most ``tol`` from summing to one are renormalized;
    anything further off is rejected.
    """

    __slots__ = ("matrix",)

    def __init__(self, entries, tol=ROW_TOL):
        if isinstance(entries, StochasticKernel):
            entries = entries.matrix
        object.__setattr__(self, "matrix", _as_matrix(entries, tol))

    def __setattr__(self, name, value):
        raise AttributeError("StochasticKernel is immutable")

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    @property
    def delta(self) -> float:
        return contraction(self)

    @property
    def alpha(self) -> float:
        return 1.0 - contraction(self)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __matmul__(self, other):
        if isinstance(other, StochasticKernel):
            return compose(self, other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, StochasticKernel):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def __repr__(self):
        return f"StochasticKernel({self.matrix.tolist()!r})"


class Distribution:
    """Immutable probability vector over ``S`` states."""

    __slots__ = ("weights",)

    def __init__(self, weights, tol=ROW_TOL):
        if isinstance(weights, Distribution):
            weights = weights.weights
        object.__setattr__(self, "weights", _as_weights(weights, tol))

    def __setattr__(self, name, value):
        raise AttributeError("Distribution is immutable")

    @classmethod
    def uniform(cls, n_states):
        return cls(np.full(n_states, 1.0 / n_states))

    @classmethod
    def point_mass(cls, n_states, state):
        w = np.zeros(n_states)
        w[state] = 1.0
        return cls(w)

    @property
    def n_states(self) -> int:
        return self.weights.size

    def expect(self, u) -> float:
        return float(np.dot(self.weights, u))

    def variance(self, u) -> float:
        u = np.asarray(u, dtype=float)
        m = self.expect(u)
        return float(np.dot(self.weights, (u - m) ** 2))

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())

    def __repr__(self):
        return f"Distribution({self.weights.tolist()!r})"


def _matrix(k):
    if isinstance(k, StochasticKernel):
        return k.matrix
    return np.asarray(k, dtype=float)


def _weights(mu):
    if isinstance(mu, Distribution):
        return mu.weights
    return np.asarray(mu, dtype=float)


def flip_kernel(p: float) -> StochasticKernel:
    """Two-state kernel that switches state with probability ``p``."""
    return StochasticKernel([[1.0 - p, p], [p, 1.0 - p]])


def total_variation(mu, nu) -> float:
    """Half the L1 distance; equals sup_A |mu(A) - nu(A)| for probability vectors."""
    return 0.5 * float(np.abs(_weights(mu) - _weights(nu)).sum())


def oscillation(u) -> float:
    u = np.asarray(u, dtype=float)
    return float(u.max() - u.min())


def contraction(k) -> float:
    """Contraction coefficient by exhaustive scan over row pairs."""
    P = _matrix(k)
    if P.shape[0] == 1:
        return 0.0
    d = 0.5 * np.abs(P[:, None, :] - P[None, :, :]).sum(axis=-1)
    return float(min(d.max(), 1.0))


def alpha(k) -> float:
    return 1.0 - contraction(k)


def contraction_stack(kernels) -> np.ndarray:
    """Contraction coefficient of every matrix in an ``(m, S, S)`` stack."""
    K = np.asarray(kernels, dtype=float)
    m, S, _ = K.shape
    out = np.zeros(m)
    for a in range(S - 1):
        d = 0.5 * np.abs(K[:, a + 1:, :] - K[:, a:a + 1, :]).sum(axis=-1)
        out = np.maximum(out, d.max(axis=1))
    return np.minimum(out, 1.0)


def compose(a, b) -> StochasticKernel:
    """The two-step kernel ``a`` then ``b`` (matrix product)."""
    A, B = _matrix(a), _matrix(b)
    if A.shape != B.shape:
        raise DimensionError(f"cannot compose kernels of shapes {A.shape} and {B.shape}")
    return StochasticKernel(A @ B, tol=1e-10)


def apply_measure(mu, k) -> Distribution:
    w, P = _weights(mu), _matrix(k)
    if w.shape[0] != P.shape[0]:
        raise DimensionError(f"measure has {w.shape[0]} states, kernel has {P.shape[0]}")
    return Distribution(w @ P, tol=1e-10)


def apply_function(k, u) -> np.ndarray:
    P, u = _matrix(k), np.asarray(u, dtype=float)
    if u.shape != (P.shape[0],):
        raise DimensionError(f"function has shape {u.shape}, kernel has {P.shape[0]} states")
    return P @ u


def reverse_kernel(alpha_, k) -> StochasticKernel:
    """Time reversal of ``k`` under the source law ``alpha_``.

    ``rev(y, x) = alpha_(x) k(x, y) / beta(y)`` with ``beta = alpha_ k``.  Every
    destination state must carry mass under ``beta``.
    """
    w, P = _weights(alpha_), _matrix(k)
    if w.shape[0] != P.shape[0]:
        raise DimensionError(f"measure has {w.shape[0]} states, kernel has {P.shape[0]}")
    beta = w @ P
    empty = np.flatnonzero(beta <= 0.0)
    if empty.size:
        s = int(empty[0])
        raise ZeroMassError(f"destination state {s} has zero mass; restrict the state space first", s)
    return StochasticKernel((w[:, None] * P).T / beta[:, None], tol=1e-10)


class PairMeasure:
    """Joint law of ``(x1, x2)`` with both marginals cached."""

    __slots__ = ("joint", "marginal_src", "marginal_dst")

    def __init__(self, joint, tol=ROW_TOL):
        J = np.array(joint, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise InvalidKernelError(f"joint law must be square, got shape {J.shape}")
        if np.any(J < -tol) or not np.all(np.isfinite(J)):
            raise InvalidKernelError("joint law has negative or non-finite entries")
        J[J < 0] = 0.0
        if abs(J.sum() - 1.0) > tol:
            raise InvalidKernelError(f"joint law has total mass {J.sum()!r}")
        J /= J.sum()
        J.setflags(write=False)
        object.__setattr__(self, "joint", J)
        object.__setattr__(self, "marginal_src", Distribution(J.sum(axis=1), tol=1e-10))
        object.__setattr__(self, "marginal_dst", Distribution(J.sum(axis=0), tol=1e-10))

    def __setattr__(self, name, value):
        raise AttributeError("PairMeasure is immutable")

    @classmethod
    def from_kernel(cls, source, k):
        w, P = _weights(source), _matrix(k)
        return cls(w[:, None] * P)

    def forward_kernel(self) -> StochasticKernel:
        a = self.marginal_src.weights
        empty = np.flatnonzero(a <= 0.0)
        if empty.size:
            s = int(empty[0])
            raise ZeroMassError(f"source state {s} has zero mass; forward kernel undefined", s)
        return StochasticKernel(self.joint / a[:, None], tol=1e-10)


@dataclass(frozen=True)
class Check:
    """One verified inequality ``lhs <relation> rhs`` up to ``tol``."""

    name: str
    lhs: float
    rhs: float
    relation: str = "<="
    tol: float = CHECK_TOL

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs if self.relation == "<=" else self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return bool(self.slack >= -self.tol)

    def to_dict(self):
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "relation": self.relation,
            "slack": self.slack,
            "passed": self.passed,
        }


def check_covariance_inequality(pair: PairMeasure, f, g) -> Check:
    """|E[f(x1) g(x2)]| <= sqrt(delta) ||f||_2 ||g||_2 after centering f, g."""
    a, b = pair.marginal_src, pair.marginal_dst
    f = np.asarray(f, dtype=float) - a.expect(f)
    g = np.asarray(g, dtype=float) - b.expect(g)
    d = contraction(pair.forward_kernel())
    lhs = abs(float(f @ pair.joint @ g))
    rhs = np.sqrt(d) * np.sqrt(a.expect(f * f)) * np.sqrt(b.expect(g * g))
    return Check("covariance", lhs, float(rhs))


def check_pair_bound(pair: PairMeasure, f, g) -> tuple[Check, Check]:
    """E[(f(x1) - g(x2))^2] >= alpha * V(f) and >= alpha * V(g)."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    a = alpha(pair.forward_kernel())
    lhs = float((pair.joint * (f[:, None] - g[None, :]) ** 2).sum())
    return (
        Check("pair_bound_src", lhs, a * pair.marginal_src.variance(f), ">="),
        Check("pair_bound_dst", lhs, a * pair.marginal_dst.variance(g), ">="),
    )
