import numpy as np
import pytest

from nhmc.chain import build_homogeneous, marginals
from nhmc.errors import EnumerationLimitError
from nhmc.exact import mean_of_sum, variance_of_sum
from nhmc.kernels import flip_kernel
from nhmc.oracle import (conditional_expectation, enumerate_paths, path_expectation, path_marginals,
                         path_moments, path_sums)
from strategies import random_spec


def test_total_mass_is_one():
    rng = np.random.default_rng(50)
    for _ in range(10):
        s = random_spec(rng)
        assert path_expectation(s, lambda p: np.ones(p.shape[0])) == pytest.approx(1.0, abs=1e-14)


def test_indicator_gives_marginal():
    s = random_spec(np.random.default_rng(51), S=3, n=6)
    mu = marginals(s)
    for k in range(6):
        for x in range(3):
            assert path_expectation(s, lambda p: (p[:, k] == x).astype(float)) == pytest.approx(mu[k, x], abs=1e-14)


def test_second_moment_consistency():
    s = random_spec(np.random.default_rng(52), S=3, n=7)
    second = path_expectation(s, lambda p: path_sums(s, p) ** 2)
    assert second == pytest.approx(variance_of_sum(s) + mean_of_sum(s) ** 2, rel=1e-12)


def test_enumeration_covers_every_path_once():
    s = random_spec(np.random.default_rng(53), S=3, n=5)
    seen = np.concatenate([p for p, _ in enumerate_paths(s, chunk=7)])
    assert len({tuple(r) for r in seen}) == 3 ** 5 == len(seen)


def test_chunking_does_not_change_results():
    s = random_spec(np.random.default_rng(54), S=2, n=9)
    a = [w for _, w in enumerate_paths(s, chunk=5)]
    b = [w for _, w in enumerate_paths(s)]
    np.testing.assert_array_equal(np.concatenate(a), np.concatenate(b))


def test_enumeration_limit():
    s = build_homogeneous(flip_kernel(0.3), [1.0, 0.0], 30)
    with pytest.raises(EnumerationLimitError):
        next(enumerate_paths(s))


def test_moments_and_marginals_of_flip_chain():
    s = build_homogeneous(flip_kernel(0.25), [1.0, 0.0], 6)
    mean, var = path_moments(s)
    assert mean == pytest.approx(3.0, abs=1e-14)
    lam = 0.5
    assert var == pytest.approx(6 / 4 + 0.5 * sum((6 - k) * lam ** k for k in range(1, 6)), rel=1e-13)
    np.testing.assert_allclose(path_marginals(s), 0.5, atol=1e-15)


def test_conditional_expectation_uses_point_masses():
    s = build_homogeneous(flip_kernel(0.25), [1.0, 0.0], 4)
    # E[1{X_3 = 0} | X_1 = x] = Q(1/4)^2 (x, 0)
    got = conditional_expectation(s, 1, lambda p: (p[:, 2] == 0).astype(float))
    P2 = np.linalg.matrix_power(flip_kernel(0.25).matrix, 2)
    np.testing.assert_allclose(got, P2[:, 0], atol=1e-15)
