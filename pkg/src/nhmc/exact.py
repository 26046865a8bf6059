"""Exact (sampling-free) martingale decomposition of an additive functional.

Every conditional expectation given the current state is stored as a vector
indexed by that state, so all quantities below cost ``O(n S^2)`` except the
pairwise decay check in :func:`check_z_bound`, which is ``O(n^2 S)``.

Notation (0-based time, ``fbar`` the centered summands):

* ``Z[t] = fbar[t] + K[t] @ Z[t+1]``, ``Z[n-1] = fbar[n-1]``; ``Z[t](x)`` is
  the expected remaining sum given ``X_t = x``.
* ``pred[t] = K[t] @ Z[t+1]``, the prediction of ``Z[t+1]`` from ``X_t``.
* The increment entering at time ``t >= 1`` is ``Z[t](X_t) - pred[t-1](X_{t-1})``
  and ``S_n - E S_n`` equals the sum of these plus ``Z[0](X_0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chain import ArraySchemeFamily, ChainScalars, ChainSpec, marginals, scalars, step_alphas
from .errors import DegenerateError, EnumerationLimitError
from .kernels import CHECK_TOL, Check

DEFAULT_EXACT_CAP = 20000
OSC_BOUND_FACTOR = 64.0
TREND_TOL = 0.05


def _freeze(a):
    a.setflags(write=False)
    return a


def centered_functions(spec: ChainSpec, mu=None) -> np.ndarray:
    """Summands with their means under the marginals removed.

    Rows that are constant across states are set to exactly zero.
    """
    if mu is None:
        mu = marginals(spec)
    F = spec.functions
    means = np.einsum("ts,ts->t", mu, F)
    fbar = F - means[:, None]
    fbar[np.ptp(F, axis=1) == 0.0] = 0.0
    return fbar


def mean_of_sum(spec: ChainSpec, mu=None) -> float:
    if mu is None:
        mu = marginals(spec)
    return math.fsum(np.einsum("ts,ts->t", mu, spec.functions))


def resolvent_sequence(spec: ChainSpec, fbar=None) -> np.ndarray:
    """``Z[t](x) = sum_{s >= t} E[fbar_s(X_s) | X_t = x]`` by backward recursion."""
    if fbar is None:
        fbar = centered_functions(spec)
    Z = np.empty_like(fbar)
    Z[-1] = fbar[-1]
    for t in range(spec.n - 2, -1, -1):
        Z[t] = fbar[t] + spec.kernels[t] @ Z[t + 1]
    return Z


def variance_of_sum(spec: ChainSpec, mu=None) -> float:
    """Exact ``V(S_n)`` from the covariance expansion.

    ``g[t] = E[sum_{s > t} fbar_s | X_t]`` is accumulated backwards and
    ``V = sum_t E[fbar_t^2 + 2 fbar_t g_t]``.
    """
    if mu is None:
        mu = marginals(spec)
    fbar = centered_functions(spec, mu)
    g = np.zeros(spec.n_states)
    terms = np.empty(spec.n)
    for t in range(spec.n - 1, -1, -1):
        terms[t] = mu[t] @ (fbar[t] * (fbar[t] + 2.0 * g))
        if t:
            g = spec.kernels[t - 1] @ (fbar[t] + g)
    return max(math.fsum(terms), 0.0)


def degenerate_threshold(spec: ChainSpec) -> float:
    C = max(float(np.abs(spec.functions).max()), 1.0)
    return spec.n * (1e-12 * C) ** 2


@dataclass(frozen=True, eq=False)
class MartingaleDecomposition:
    """Martingale pieces of ``S_n - E[S_n]``.

    ``cond_var[t-1](x)`` is the normalized conditional variance
    ``E[xi_t^2 | X_{t-1} = x]`` of the increment entering at time ``t``; it
    and ``xi_sup`` are ``None`` when ``V_Sn`` is (numerically) zero.
    """

    marginals: np.ndarray
    fbar: np.ndarray
    Z: np.ndarray
    predicted_Z: np.ndarray
    increment_var: np.ndarray
    V_Z1: float
    V_Sn: float
    mean_Sn: float
    cond_var: Optional[np.ndarray]
    xi_sup: Optional[float]

    @property
    def degenerate(self) -> bool:
        return self.cond_var is None

    def increments(self, t):
        """Unnormalized increment at time ``t`` as a ``(S, S)`` table over ``(X_{t-1}, X_t)``."""
        return self.Z[t][None, :] - self.predicted_Z[t - 1][:, None]


def decompose(spec: ChainSpec) -> MartingaleDecomposition:
    mu = marginals(spec)
    fbar = centered_functions(spec, mu)
    Z = resolvent_sequence(spec, fbar)
    n, S = fbar.shape
    K = spec.kernels
    pred = np.einsum("txy,ty->tx", K, Z[1:]) if n > 1 else np.zeros((0, S))
    # c[t-1](x) = sum_y K[t-1](x, y) (Z[t](y) - pred[t-1](x))^2
    diff = Z[1:, None, :] - pred[:, :, None]
    c = np.einsum("txy,txy->tx", K, diff * diff)
    increment_var = np.einsum("tx,tx->t", mu[:-1], c)
    V_Z1 = float(mu[0] @ Z[0] ** 2)
    V = max(math.fsum(increment_var) + V_Z1, 0.0)
    cond_var, xi_sup = None, None
    if V > degenerate_threshold(spec):
        cond_var = _freeze(c / V)
        supported = K > 0.0
        xi_sup = float(np.abs(diff)[supported].max()) / math.sqrt(V) if n > 1 else 0.0
    return MartingaleDecomposition(
        marginals=_freeze(mu),
        fbar=_freeze(fbar),
        Z=_freeze(Z),
        predicted_Z=_freeze(pred),
        increment_var=_freeze(increment_var),
        V_Z1=V_Z1,
        V_Sn=V,
        mean_Sn=mean_of_sum(spec, mu),
        cond_var=cond_var,
        xi_sup=xi_sup,
    )


def _require_nondegenerate(d: MartingaleDecomposition):
    if d.degenerate:
        raise DegenerateError("V(S_n) = 0: normalized diagnostics are undefined")


@dataclass(frozen=True)
class Negligibility:
    z_ratio: float
    xi_sup: float

    @property
    def consistent(self) -> bool:
        return self.xi_sup <= 2.0 * self.z_ratio + CHECK_TOL


def negligibility_diagnostic(d: MartingaleDecomposition) -> Negligibility:
    """``max_t ||Z_t||_inf / sqrt(V(S_n))`` together with ``max_t ||xi_t||_inf``."""
    _require_nondegenerate(d)
    z_ratio = float(np.abs(d.Z).max()) / math.sqrt(d.V_Sn)
    return Negligibility(z_ratio, d.xi_sup)


def _future_sum(spec: ChainSpec, y: np.ndarray) -> np.ndarray:
    """``R[t](x) = E[sum_{s > t} y_s(X_s) | X_t = x]`` for ``y`` indexed like ``cond_var``."""
    m = y.shape[0]
    R = np.zeros_like(y)
    for t in range(m - 2, -1, -1):
        R[t] = spec.kernels[t] @ (y[t + 1] + R[t + 1])
    return R


def _future_cond_var(spec: ChainSpec, d: MartingaleDecomposition) -> np.ndarray:
    return _future_sum(spec, d.cond_var)


@dataclass(frozen=True)
class LLNDiagnostic:
    """L2 spread of the summed conditional variances ``Y = sum_t v_t(X_{t-1})``.

    ``distance`` is ``||Y - E[Y]||_2``; ``distance_to_one`` is ``||Y - 1||_2``.
    ``mean`` equals ``1 - V(Z_1)/V(S_n)``.
    """

    distance: float
    mean: float
    distance_to_one: float


def lln_l2_diagnostic(spec: ChainSpec, d: MartingaleDecomposition) -> LLNDiagnostic:
    _require_nondegenerate(d)
    y = d.cond_var
    mu = d.marginals[:-1]
    if y.shape[0] == 0:
        return LLNDiagnostic(0.0, 0.0, 1.0)
    means = np.einsum("tx,tx->t", mu, y)
    mean = math.fsum(means)
    # centering each term first keeps small spreads free of cancellation
    yc = y - means[:, None]
    R = _future_sum(spec, yc)
    var = max(math.fsum(np.einsum("tx,tx->t", mu, yc * (yc + 2.0 * R))), 0.0)
    return LLNDiagnostic(math.sqrt(var), mean, math.sqrt(var + (mean - 1.0) ** 2))


@dataclass(frozen=True)
class OscillationDiagnostic:
    value: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.value <= self.bound + CHECK_TOL


def oscillation_bound(sc: ChainScalars) -> float:
    if sc.alpha_n <= 0.0 or sc.sum_variances <= 0.0:
        return math.inf
    return OSC_BOUND_FACTOR * sc.C_n ** 2 / (sc.alpha_n ** 3 * sc.sum_variances)


def oscillation_diagnostic(spec: ChainSpec, d: MartingaleDecomposition, sc=None) -> OscillationDiagnostic:
    """``max_{2 <= l <= n-1} Osc E[sum_{j > l} v_j | X_l]`` (1-based ``l``).

    The conditional expectation given ``X_l`` is ``y_l + R_l`` with ``y``, ``R``
    as in :func:`_future_cond_var`; the oscillation is taken over all states.
    """
    _require_nondegenerate(d)
    if sc is None:
        sc = scalars(spec, d.marginals)
    y = d.cond_var
    value = 0.0
    if y.shape[0] >= 2:
        W = (y + _future_cond_var(spec, d))[1:]
        value = float(np.ptp(W, axis=1).max())
    return OscillationDiagnostic(value, oscillation_bound(sc))


@dataclass(frozen=True)
class LowerBoundCheck:
    quarter: Check
    eighth: Check

    @property
    def passed(self) -> bool:
        return self.quarter.passed and self.eighth.passed

    @property
    def ratio(self) -> float:
        """``V(S_n) / (alpha_n sum V(f_t))``; the proven floor is 1/4."""
        denom = self.quarter.rhs * 4.0
        return self.quarter.lhs / denom if denom > 0 else math.inf


def check_variance_lower_bound(spec: ChainSpec, sc=None) -> LowerBoundCheck:
    """``V(S_n) >= (alpha_n / 4) sum_t V(f_t(X_t))``, plus the older ``alpha_n / 8`` form."""
    mu = marginals(spec)
    if sc is None:
        sc = scalars(spec, mu)
    V = variance_of_sum(spec, mu)
    base = sc.alpha_n * sc.sum_variances
    return LowerBoundCheck(
        Check("variance_lower_bound_quarter", V, base / 4.0, ">="),
        Check("variance_lower_bound_eighth", V, base / 8.0, ">="),
    )


@dataclass(frozen=True)
class ZBoundCheck:
    """Decay of ``E[fbar_j(X_j) | X_i]`` and the sup bound on ``Z``.

    ``decay_slack`` uses ``2 C_n (1 - alpha_n)^(j-i)``; ``sharp_slack`` uses
    ``2 C_n prod_{i <= t < j} delta_t``.  ``z_slack`` is ``None`` when
    ``alpha_n = 0``.  Slacks are ``bound - value`` minimized over all pairs.
    """

    decay_slack: float
    sharp_slack: float
    z_slack: Optional[float]
    tol: float = CHECK_TOL

    @property
    def passed(self) -> bool:
        ok = self.decay_slack >= -self.tol and self.sharp_slack >= -self.tol
        return ok and (self.z_slack is None or self.z_slack >= -self.tol)

    def to_dict(self):
        return {
            "decay_slack": self.decay_slack,
            "sharp_slack": self.sharp_slack,
            "z_slack": self.z_slack,
            "passed": self.passed,
        }


def check_z_bound(spec: ChainSpec, sc=None, mu=None) -> ZBoundCheck:
    if mu is None:
        mu = marginals(spec)
    if sc is None:
        sc = scalars(spec, mu)
    fbar = centered_functions(spec, mu)
    n = spec.n
    deltas = 1.0 - step_alphas(spec)
    two_c = 2.0 * sc.C_n
    rate = 1.0 - sc.alpha_n
    # column j of M holds E[fbar_j(X_j) | X_i = .] for the current i
    M = fbar.T.copy()
    sharp = np.ones(n)
    decay_slack = two_c - float(np.abs(fbar).max())
    sharp_slack = decay_slack
    js = np.arange(n)
    for i in range(n - 2, -1, -1):
        M[:, i + 1:] = spec.kernels[i] @ M[:, i + 1:]
        sharp[i + 1:] *= deltas[i]
        sup = np.abs(M[:, i + 1:]).max(axis=0)
        decay = two_c * rate ** (js[i + 1:] - i)
        decay_slack = min(decay_slack, float((decay - sup).min()))
        sharp_slack = min(sharp_slack, float((two_c * sharp[i + 1:] - sup).min()))
    z_slack = None
    if sc.alpha_n > 0.0:
        Z = resolvent_sequence(spec, fbar)
        z_slack = two_c / sc.alpha_n - float(np.abs(Z).max())
    return ZBoundCheck(decay_slack, sharp_slack, z_slack)


@dataclass(frozen=True)
class GateRow:
    n: int
    alpha_n: float
    C_n: float
    sum_variances: float
    condition_value: Optional[float]
    corollary_value: float
    note: str = ""


@dataclass(frozen=True)
class GateReport:
    """Per-``n`` values of ``C_n^2 alpha_n^-3 / sum V`` and ``n^(1/3) alpha_n``.

    ``slope`` is the least-squares log-log slope of the condition value in
    ``n``; the CLT is predicted when the values decrease monotonically and
    the slope is below ``-TREND_TOL``.
    """

    description: str
    rows: list
    slope: Optional[float]
    monotone_decreasing: bool

    @property
    def clt_predicted(self) -> bool:
        return self.monotone_decreasing and self.slope is not None and self.slope < -TREND_TOL

    def verdict(self) -> str:
        if self.slope is None:
            return "undetermined (fewer than two usable n)"
        if self.clt_predicted:
            return f"condition value decreasing (slope {self.slope:.4f}): CLT predicted"
        return f"condition value not decreasing (slope {self.slope:.4f}): CLT not predicted"

    def to_dict(self):
        return {
            "description": self.description,
            "rows": [r.__dict__ for r in self.rows],
            "slope": self.slope,
            "monotone_decreasing": self.monotone_decreasing,
            "clt_predicted": self.clt_predicted,
        }


def gate_row(spec: ChainSpec) -> GateRow:
    sc = scalars(spec)
    n = spec.n
    cor = n ** (1.0 / 3.0) * sc.alpha_n
    if sc.alpha_n <= 0.0:
        return GateRow(n, sc.alpha_n, sc.C_n, sc.sum_variances, None, cor, "alpha_n = 0")
    if sc.sum_variances <= 0.0:
        return GateRow(n, sc.alpha_n, sc.C_n, sc.sum_variances, None, cor, "sum of variances = 0")
    value = sc.C_n ** 2 / (sc.alpha_n ** 3 * sc.sum_variances)
    return GateRow(n, sc.alpha_n, sc.C_n, sc.sum_variances, value, cor)


def dobrushin_gate(family: ArraySchemeFamily, ns: Sequence[int]) -> GateReport:
    rows = [gate_row(family(int(n))) for n in sorted(ns)]
    good = [r for r in rows if r.condition_value is not None]
    slope = None
    if len(good) >= 2:
        x = np.log([r.n for r in good])
        y = np.log([r.condition_value for r in good])
        slope = float(np.polyfit(x, y, 1)[0])
    values = [r.condition_value for r in good]
    monotone = len(values) >= 2 and all(b < a * (1.0 - 1e-9) for a, b in zip(values, values[1:]))
    return GateReport(family.description, rows, slope, monotone)


@dataclass(frozen=True)
class DiagnosticsReport:
    """Everything the exact engine can say about one chain."""

    n: int
    scalars: ChainScalars
    mean_Sn: float
    V_Sn: float
    V_Z1: float
    dobrushin_condition_value: Optional[float]
    corollary_value: float
    negligibility: Optional[float]
    xi_sup: Optional[float]
    lln_l2_distance: Optional[float]
    lln_mean: Optional[float]
    lln_distance_to_one: Optional[float]
    oscillation_sup: Optional[float]
    oscillation_bound: float
    lower_bound: LowerBoundCheck
    z_bound: ZBoundCheck
    extra: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.negligibility is None

    @property
    def lower_bound_ok(self) -> bool:
        return self.lower_bound.passed

    @property
    def z_bound_ok(self) -> bool:
        return self.z_bound.passed

    @property
    def oscillation_ok(self) -> Optional[bool]:
        if self.oscillation_sup is None:
            return None
        return self.oscillation_sup <= self.oscillation_bound + CHECK_TOL

    def to_dict(self):
        return {
            "n": self.n,
            "alpha_n": self.scalars.alpha_n,
            "C_n": self.scalars.C_n,
            "sum_variances": self.scalars.sum_variances,
            "mean_Sn": self.mean_Sn,
            "V_Sn": self.V_Sn,
            "V_Z1": self.V_Z1,
            "degenerate": self.degenerate,
            "dobrushin_condition_value": self.dobrushin_condition_value,
            "corollary_value": self.corollary_value,
            "negligibility": self.negligibility,
            "xi_sup": self.xi_sup,
            "lln_l2_distance": self.lln_l2_distance,
            "lln_mean": self.lln_mean,
            "lln_distance_to_one": self.lln_distance_to_one,
            "oscillation_sup": self.oscillation_sup,
            "oscillation_bound": _finite_or_none(self.oscillation_bound),
            "oscillation_ok": self.oscillation_ok,
            "lower_bound_ok": self.lower_bound_ok,
            "lower_bound": {
                "quarter": self.lower_bound.quarter.to_dict(),
                "eighth": self.lower_bound.eighth.to_dict(),
                "ratio": _finite_or_none(self.lower_bound.ratio),
            },
            "z_bound_ok": self.z_bound_ok,
            "z_bound": self.z_bound.to_dict(),
            **self.extra,
        }


def _finite_or_none(x):
    return x if x is not None and math.isfinite(x) else None


def analyze(spec: ChainSpec, exact_cap: int = DEFAULT_EXACT_CAP) -> DiagnosticsReport:
    """Run every exact diagnostic on ``spec``.

    Refuses chains longer than ``exact_cap``; use Monte Carlo beyond that.
    """
    if spec.n > exact_cap:
        raise EnumerationLimitError(f"n = {spec.n} exceeds the exact-analysis cap {exact_cap}")
    d = decompose(spec)
    sc = scalars(spec, d.marginals)
    row = gate_row(spec)
    lower = check_variance_lower_bound(spec, sc)
    zb = check_z_bound(spec, sc, d.marginals)
    neg = lln = osc = None
    if not d.degenerate:
        neg = negligibility_diagnostic(d)
        lln = lln_l2_diagnostic(spec, d)
        osc = oscillation_diagnostic(spec, d, sc)
    return DiagnosticsReport(
        n=spec.n,
        scalars=sc,
        mean_Sn=d.mean_Sn,
        V_Sn=d.V_Sn,
        V_Z1=d.V_Z1,
        dobrushin_condition_value=row.condition_value,
        corollary_value=row.corollary_value,
        negligibility=neg.z_ratio if neg else None,
        xi_sup=neg.xi_sup if neg else None,
        lln_l2_distance=lln.distance if lln else None,
        lln_mean=lln.mean if lln else None,
        lln_distance_to_one=lln.distance_to_one if lln else None,
        oscillation_sup=osc.value if osc else None,
        oscillation_bound=oscillation_bound(sc),
        lower_bound=lower,
        z_bound=zb,
    )


@dataclass(frozen=True)
class RatioSearchResult:
    """Smallest ``V(S_n) / (alpha_n sum V(f_t))`` found and the chain attaining it."""

    ratio: float
    spec: ChainSpec
    evaluations: int


def _chain_from_params(theta, S, n) -> ChainSpec:
    k = (n - 1) * S * S
    K = np.exp(theta[:k].reshape(n - 1, S, S) - theta[:k].max())
    K /= K.sum(axis=-1, keepdims=True)
    F = theta[k:k + n * S].reshape(n, S)
    w = np.exp(theta[k + n * S:] - theta[k + n * S:].max())
    return ChainSpec(tuple(str(s + 1) for s in range(S)), w / w.sum(), K, F)


def search_lower_bound_ratio(seed: int = 0, states=(2, 3), lengths=(3, 4, 5), restarts: int = 3,
                             maxiter: int = 2000) -> RatioSearchResult:
    """Random restarts of a Nelder-Mead descent on the variance lower-bound ratio.

    Kernels and the initial law are softmax-parametrized so every point is a
    valid chain.  The proven floor is 1/4; ratios below 1/2 show the constant
    cannot be raised to 1/2.
    """
    from scipy.optimize import minimize

    rng = np.random.default_rng(seed)
    best = None
    evals = 0

    def objective(theta, S, n):
        nonlocal evals
        evals += 1
        r = check_variance_lower_bound(_chain_from_params(theta, S, n)).ratio
        return r if math.isfinite(r) else 10.0

    for S in states:
        for n in lengths:
            dim = (n - 1) * S * S + n * S + S
            for _ in range(restarts):
                res = minimize(objective, rng.normal(scale=2.0, size=dim), args=(S, n), method="Nelder-Mead",
                               options={"maxiter": maxiter, "xatol": 1e-8, "fatol": 1e-10})
                if best is None or res.fun < best[0]:
                    best = (float(res.fun), _chain_from_params(res.x, S, n))
    return RatioSearchResult(best[0], best[1], evals)
