import numpy as np
import pytest

from nhmc.chain import (ArraySchemeFamily, ChainSpec, build_dobrushin_example, build_homogeneous,
                        dobrushin_block_size, dobrushin_family, marginals, power_rate, scalars)
from nhmc.errors import DimensionError, InvalidKernelError
from nhmc.kernels import compose, flip_kernel
from nhmc.oracle import path_expectation, path_marginals
from strategies import random_spec

Q = lambda p: flip_kernel(p).matrix  # noqa: E731


def test_spec_validation():
    with pytest.raises(DimensionError):
        ChainSpec(("a", "b"), [0.5, 0.5], np.zeros((1, 2, 2)) + 0.5, np.zeros((3, 2)))
    with pytest.raises(DimensionError):
        ChainSpec(("a", "a"), [0.5, 0.5], [], np.zeros((1, 2)))
    with pytest.raises(InvalidKernelError):
        ChainSpec(("a", "b"), [0.5, 0.5], [[[0.5, 0.6], [0.5, 0.5]]], np.zeros((2, 2)))
    with pytest.raises(InvalidKernelError):
        ChainSpec(("a", "b"), [0.5, 0.5], [], [[np.nan, 0.0]])
    with pytest.raises(DimensionError):
        ChainSpec((), [], [], np.zeros((1, 0)))


def test_spec_is_immutable_and_comparable():
    s = build_homogeneous(Q(0.3), [1.0, 0.0], 4)
    with pytest.raises(ValueError):
        s.kernels[0, 0, 0] = 0.0
    assert s == build_homogeneous(Q(0.3), [1.0, 0.0], 4)
    assert s != build_homogeneous(Q(0.3), [1.0, 0.0], 5)


def test_marginals_homogeneous_flip_stay_uniform():
    mu = marginals(build_homogeneous(Q(0.37), [1.0, 0.0], 20))
    np.testing.assert_allclose(mu, 0.5, atol=1e-15)


def test_marginals_single_step():
    s = ChainSpec(("a", "b"), [0.25, 0.75], [], [[1.0, 2.0]])
    np.testing.assert_array_equal(marginals(s), [[0.25, 0.75]])


def test_marginals_match_enumeration():
    rng = np.random.default_rng(10)
    for _ in range(20):
        s = random_spec(rng, S=3, n=5)
        np.testing.assert_allclose(marginals(s), path_marginals(s), atol=1e-14)


def test_marginals_match_composed_kernels():
    rng = np.random.default_rng(11)
    s = random_spec(rng, S=3, n=8)
    mu = marginals(s)
    P = np.eye(3)
    for t in range(1, 8):
        P = compose(P, s.kernels[t - 1]).matrix
        np.testing.assert_allclose(mu[t], s.initial @ P, atol=1e-12)


def test_scalars_definitions():
    rng = np.random.default_rng(12)
    s = random_spec(rng, S=3, n=6)
    sc = scalars(s)
    from nhmc.kernels import alpha
    assert sc.alpha_n == min(alpha(K) for K in s.kernels)
    assert sc.C_n == np.abs(s.functions).max()
    assert sc.sum_variances == pytest.approx(sc.variances.sum())


def test_scalars_variances_match_enumeration():
    rng = np.random.default_rng(13)
    for _ in range(10):
        s = random_spec(rng, S=2, n=6)
        sc = scalars(s)
        for t in range(s.n):
            m = path_expectation(s, lambda p: s.functions[t, p[:, t]])
            v = path_expectation(s, lambda p: (s.functions[t, p[:, t]] - m) ** 2)
            assert sc.variances[t] == pytest.approx(v, abs=1e-13)


def test_scalars_constant_functions():
    s = build_homogeneous(Q(0.2), [3.0, 3.0], 5)
    assert np.all(scalars(s).variances == 0.0)


def test_scalars_single_step_alpha_is_one():
    s = ChainSpec(("a",), [1.0], [], [[1.0]])
    assert scalars(s).alpha_n == 1.0


# --- block chain -------------------------------------------------------------

def test_dobrushin_n10_half():
    s = build_dobrushin_example(10, 0.5)
    # b = 2: i = 1 slow Q(1/2), even i coin, odd i >= 3 fast Q(1/2)
    assert dobrushin_block_size(0.5) == 2
    for K in s.kernels:
        np.testing.assert_array_equal(K, Q(0.5))


def test_dobrushin_n12_quarter():
    s = build_dobrushin_example(12, 0.25)
    # kernels[i - 1] is the kernel at 1-based transition i
    np.testing.assert_array_equal(s.kernels[3], Q(0.5))
    np.testing.assert_array_equal(s.kernels[1], Q(0.25))
    np.testing.assert_array_equal(s.kernels[5], Q(0.75))
    np.testing.assert_array_equal(s.kernels[7], Q(0.5))
    np.testing.assert_array_equal(s.kernels[0], Q(0.25))
    np.testing.assert_array_equal(s.kernels[2], Q(0.25))
    np.testing.assert_array_equal(s.kernels[4], Q(0.75))


def test_dobrushin_long_block_is_homogeneous_slow_chain():
    s = build_dobrushin_example(6, 0.1)
    for K in s.kernels:
        np.testing.assert_array_equal(K, Q(0.1))


def test_dobrushin_scalars():
    for n in (10, 100, 1000, 5000):
        s = build_dobrushin_example(n, power_rate(0.25))
        sc = scalars(s)
        assert sc.C_n == 1.0
        np.testing.assert_allclose(sc.variances, 0.25, atol=1e-15)
        assert sc.alpha_n == pytest.approx(2 * power_rate(0.25)(n), abs=1e-15)


def test_dobrushin_blocks_independent_across_coin():
    s = build_dobrushin_example(20, 0.25)
    mu = marginals(s)
    for i in (4, 8, 12, 16):
        joint = mu[i - 1][:, None] * s.kernels[i - 1]
        np.testing.assert_allclose(joint, np.outer(mu[i - 1], mu[i]), atol=1e-15)


def test_dobrushin_rejects_bad_rate():
    with pytest.raises(ValueError):
        build_dobrushin_example(10, 0.6)
    with pytest.raises(ValueError):
        build_dobrushin_example(10, 0.0)
    with pytest.raises(ValueError):
        build_dobrushin_example(1, 0.25)
    with pytest.raises(ValueError):
        dobrushin_family(1.5)


def test_family_checks_length():
    fam = ArraySchemeFamily(lambda n: build_homogeneous(Q(0.3), [1.0, 0.0], n + 1))
    with pytest.raises(DimensionError):
        fam(5)
    fam = dobrushin_family(0.25)
    assert fam(50).n == 50
    assert fam(50) == fam(50)


def test_power_rate_clamps():
    r = power_rate(0.25)
    assert r(2) == 0.5
    assert r(10 ** 4) == pytest.approx(0.1)


def test_build_homogeneous():
    s = build_homogeneous(Q(0.3), [1.0, -1.0], 4)
    assert s.kernels.shape == (3, 2, 2)
    assert all(np.array_equal(K, Q(0.3)) for K in s.kernels)
    assert all(np.array_equal(f, [1.0, -1.0]) for f in s.functions)
    one = build_homogeneous(Q(0.3), [1.0, -1.0], 1)
    assert one.kernels.shape == (0, 2, 2)
    with pytest.raises(DimensionError):
        build_homogeneous(Q(0.3), [1.0, 0.0, 0.0], 3)


def test_restart():
    s = build_homogeneous(Q(0.3), [1.0, -1.0], 5)
    r = s.restart(2, [1.0, 0.0])
    assert r.n == 3
    np.testing.assert_array_equal(r.initial, [1.0, 0.0])
