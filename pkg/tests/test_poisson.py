import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhmc.chain import build_homogeneous
from nhmc.errors import DimensionError
from nhmc.exact import resolvent_sequence, variance_of_sum
from nhmc.kernels import contraction, flip_kernel
from nhmc.poisson import (NonContractingError, invariant_distribution, resolvent_gap_bound, solve_poisson,
                          truncated_resolvent, verify_variance_growth)
from strategies import kernels, random_kernel


def dense_poisson(P, f):
    """Invariant law and mean-zero Poisson solution from one linear solve."""
    S = P.shape[0]
    A = np.vstack([P.T - np.eye(S), np.ones(S)])
    pi = np.linalg.lstsq(A, np.r_[np.zeros(S), 1.0], rcond=None)[0]
    fbar = f - pi @ f
    B = np.vstack([np.eye(S) - P, pi])
    u = np.linalg.lstsq(B, np.r_[fbar, 0.0], rcond=None)[0]
    return pi, u


def test_flip_closed_form():
    sol = solve_poisson(flip_kernel(0.3), [1.0, 0.0])
    np.testing.assert_allclose(sol.u, [0.5 / 0.6, -0.5 / 0.6], atol=1e-13)
    assert sol.V0 == pytest.approx(0.7 / 1.2, rel=1e-12)
    np.testing.assert_allclose(sol.invariant.weights, [0.5, 0.5], atol=1e-15)


def test_constant_function_gives_zero():
    sol = solve_poisson(flip_kernel(0.3), [2.0, 2.0])
    assert np.all(sol.u == 0.0) and sol.V0 == 0.0


def test_identity_kernel_is_rejected():
    with pytest.raises(NonContractingError):
        solve_poisson(np.eye(2), [1.0, 0.0])


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        solve_poisson(flip_kernel(0.3), [1.0, 0.0, 0.0])


def test_matches_dense_solve():
    rng = np.random.default_rng(40)
    for _ in range(50):
        S = int(rng.integers(2, 6))
        P = random_kernel(rng, S)
        if contraction(P) >= 0.95:
            continue
        f = rng.normal(size=S)
        sol = solve_poisson(P, f)
        pi, u = dense_poisson(P, f)
        np.testing.assert_allclose(sol.invariant.weights, pi, atol=1e-12)
        np.testing.assert_allclose(sol.u, u, atol=1e-10)
        assert sol.residual(P) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(kernels(min_states=2, max_states=5), st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_residual_property(P, f):
    if contraction(P) >= 0.95:
        return
    f = np.array(f[: P.shape[0]])
    sol = solve_poisson(P, f)
    assert sol.residual(P) <= 1e-10
    assert sol.invariant.expect(sol.u) == pytest.approx(0.0, abs=1e-12)
    assert sol.V0 >= 0.0


def test_invariant_distribution_is_fixed():
    P = random_kernel(np.random.default_rng(41), 4)
    pi = invariant_distribution(P).weights
    np.testing.assert_allclose(pi @ P, pi, atol=1e-13)


def test_variance_growth_flip():
    # n V(S_n)/n - n V0 tends to -(1/2) lam / (1 - lam)^2 with lam = 1 - 2p
    g = verify_variance_growth(flip_kernel(0.3), [1.0, 0.0], [10, 100, 1000, 10000])
    assert g.V0 == pytest.approx(0.7 / 1.2, rel=1e-12)
    assert g.C == pytest.approx(0.5 * 0.4 / 0.36, rel=1e-6)
    for n, r in g.rows():
        assert abs(r - g.V0) <= g.C / n + 1e-12


def test_variance_growth_matches_exact_engine():
    P = random_kernel(np.random.default_rng(42), 3)
    f = np.array([1.0, -1.0, 0.5])
    g = verify_variance_growth(P, f, [50])
    pi = invariant_distribution(P).weights
    assert g.ratios[0] == pytest.approx(variance_of_sum(build_homogeneous(P, f, 50, pi)) / 50, rel=1e-12)


def test_truncated_resolvent_is_first_resolvent_term():
    P = random_kernel(np.random.default_rng(43), 3)
    f = np.array([0.2, 1.0, -0.4])
    sol = solve_poisson(P, f)
    spec = build_homogeneous(P, f, 12, sol.invariant.weights)
    Z = resolvent_sequence(spec)
    np.testing.assert_allclose(Z[0], truncated_resolvent(P, sol.fbar, 12), atol=1e-12)
    assert np.abs(Z[0] - sol.u).max() <= resolvent_gap_bound(P, f, 12) + 1e-12
