"""Random chains and kernels shared by the test modules."""

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from nhmc.chain import ChainSpec


def random_kernel(rng, S, sparsity=0.0):
    """Dirichlet rows; with ``sparsity`` > 0 some entries are zeroed (never a whole row)."""
    P = rng.dirichlet(np.full(S, 0.7), size=S)
    if sparsity:
        mask = rng.random((S, S)) < sparsity
        mask[np.arange(S), rng.integers(0, S, S)] = False
        P = np.where(mask, 0.0, P)
        P /= P.sum(axis=1, keepdims=True)
    return P


def random_distribution(rng, S, sparsity=0.0):
    w = rng.dirichlet(np.full(S, 0.7))
    if sparsity and S > 1:
        w[rng.random(S) < sparsity] = 0.0
        if w.sum() == 0.0:
            w[rng.integers(S)] = 1.0
        w /= w.sum()
    return w


def random_spec(rng, S=None, n=None, max_states=3, max_n=8):
    """A random chain mixing dense, sparse, rank-one and permutation kernels."""
    S = S or int(rng.integers(1, max_states + 1))
    n = n or int(rng.integers(1, max_n + 1))
    kernels = []
    for _ in range(n - 1):
        kind = rng.random()
        if kind < 0.6:
            K = random_kernel(rng, S)
        elif kind < 0.8:
            K = random_kernel(rng, S, sparsity=0.5)
        elif kind < 0.9:
            K = np.tile(random_distribution(rng, S), (S, 1))
        else:
            K = np.eye(S)[rng.permutation(S)]
        kernels.append(K)
    F = rng.uniform(-1.0, 1.0, size=(n, S))
    if rng.random() < 0.2:
        F[rng.integers(n)] = rng.uniform(-1, 1)
    if rng.random() < 0.1:
        F = np.round(F)
    return ChainSpec(tuple(str(s) for s in range(S)), random_distribution(rng, S, 0.3),
                     np.array(kernels).reshape(n - 1, S, S), F)


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


@st.composite
def kernels(draw, min_states=1, max_states=4):
    S = draw(st.integers(min_states, max_states))
    # integer weights hit zeros, ties and permutation-like rows often
    rows = draw(hnp.arrays(np.int64, (S, S), elements=st.integers(0, 8))).astype(float)
    rows[rows.sum(axis=1) == 0, 0] = 1.0
    return rows / rows.sum(axis=1, keepdims=True)


@st.composite
def distributions(draw, S):
    w = draw(hnp.arrays(np.int64, (S,), elements=st.integers(0, 8))).astype(float)
    if w.sum() == 0:
        w[0] = 1.0
    return w / w.sum()


@st.composite
def specs(draw, max_states=3, max_n=7):
    return random_spec(np.random.default_rng(draw(seeds)), max_states=max_states, max_n=max_n)
