"""Seeded simulation of chains and normality diagnostics of the normalized sum.

Random numbers: path ``p`` under seed ``s`` reads its uniforms from a
Philox4x64-10 stream with key ``s`` and counter ``(0, 0, 0, p)``, one
uniform for ``X_0`` and one per transition, consumed in time order.  A
path's values therefore depend only on ``(s, p)``; batches are identical
for any chunking or worker count.
"""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from scipy.signal import fftconvolve
from scipy.special import ndtr
from scipy.stats import kstwo

from .chain import ChainSpec, build_homogeneous, dobrushin_block_size
from .errors import DegenerateError, TooFewSamplesError
from .exact import degenerate_threshold, marginals, mean_of_sum, variance_of_sum
from .kernels import flip_kernel

GENERATOR = "philox4x64-10 key=seed counter=(0,0,0,path)"
DEFAULT_SEED = 12345
MIN_FIT_SAMPLES = 10
CHUNK_ELEMENTS = 1 << 22


def worker_count() -> int:
    """Worker threads, capped by ``NHMC_THREADS`` when set."""
    n = os.cpu_count() or 1
    env = os.environ.get("NHMC_THREADS")
    if env:
        n = max(1, min(n, int(env)))
    return n


def path_uniforms(seed: int, path: int, n: int, out=None) -> np.ndarray:
    g = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, path]))
    if out is None:
        out = np.empty(n)
    g.random(out=out)
    return out


@numba.njit(nogil=True, cache=True)
def _walk(U, init_cum, cum, F, seg_lo, seg_hi, sums, segs):
    m, n = U.shape
    S = F.shape[1]
    n_seg = seg_lo.shape[0]
    for r in range(m):
        u = U[r, 0]
        x = S - 1
        for j in range(S - 1):
            if u < init_cum[j]:
                x = j
                break
        total = F[0, x]
        for k in range(n_seg):
            segs[r, k] = 0.0
            if seg_lo[k] == 0:
                segs[r, k] += F[0, x]
        for t in range(1, n):
            u = U[r, t]
            y = S - 1
            for j in range(S - 1):
                if u < cum[t - 1, x, j]:
                    y = j
                    break
            x = y
            v = F[t, x]
            total += v
            for k in range(n_seg):
                if seg_lo[k] <= t and t <= seg_hi[k]:
                    segs[r, k] += v
        sums[r] = total


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Simulated values of ``(S_n - E[S_n]) / sqrt(V(S_n))`` with exact moments.

    ``sums`` holds the raw ``S_n`` (visit counts for an indicator summand);
    ``segment_sums[:, k]`` the partial sum over the 1-based inclusive time
    window ``segments[k]``.
    """

    seed: int
    n: int
    count: int
    statistics: np.ndarray
    sums: np.ndarray
    mean_Sn: float
    V_Sn: float
    segments: tuple = ()
    segment_sums: Optional[np.ndarray] = None

    def to_csv(self, path):
        lines = [
            "# nhmc sample batch",
            f"# seed={self.seed} n={self.n} count={self.count}",
            f"# mean_Sn={self.mean_Sn!r} V_Sn={self.V_Sn!r}",
            f"# generator={GENERATOR}",
            "statistic",
        ]
        lines.extend(f"{v!r}" for v in self.statistics.tolist())
        atomic_write(path, "\n".join(lines) + "\n")


def read_batch_csv(path) -> dict:
    """Header fields plus the ``statistics`` array of a batch CSV."""
    meta = {}
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
            elif line and line != "statistic":
                values.append(float(line))
    meta["statistics"] = np.array(values)
    return meta


def atomic_write(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".nhmc-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def simulate_sums(spec: ChainSpec, count: int, seed: int = DEFAULT_SEED, segments=(), threads=None):
    """Raw ``S_n`` (and segment sums) for paths ``0 .. count-1``."""
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    n, S = spec.n, spec.n_states
    init_cum = np.cumsum(spec.initial)
    cum = np.cumsum(spec.kernels, axis=-1) if n > 1 else np.zeros((1, S, S))
    F = np.ascontiguousarray(spec.functions)
    seg_lo = np.array([a - 1 for a, _ in segments], dtype=np.int64)
    seg_hi = np.array([b - 1 for _, b in segments], dtype=np.int64)
    sums = np.empty(count)
    segs = np.zeros((count, len(segments)))
    rows = max(1, CHUNK_ELEMENTS // n)

    def run(start):
        stop = min(start + rows, count)
        U = np.empty((stop - start, n))
        for r in range(stop - start):
            path_uniforms(seed, start + r, n, U[r])
        _walk(U, init_cum, cum, F, seg_lo, seg_hi, sums[start:stop], segs[start:stop])

    starts = range(0, count, rows)
    workers = threads or worker_count()
    if workers == 1:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, starts))
    return sums, segs


def sample(spec: ChainSpec, count: int, seed: int = DEFAULT_SEED, segments=(), threads=None) -> SampleBatch:
    """Simulate ``count`` paths and normalize ``S_n`` by its exact mean and variance."""
    mu = marginals(spec)
    mean = mean_of_sum(spec, mu)
    V = variance_of_sum(spec, mu)
    if V <= degenerate_threshold(spec):
        raise DegenerateError("V(S_n) = 0: the normalized sum is undefined")
    segments = tuple((int(a), int(b)) for a, b in segments)
    sums, segs = simulate_sums(spec, count, seed, segments, threads)
    return SampleBatch(
        seed=seed,
        n=spec.n,
        count=count,
        statistics=(sums - mean) / math.sqrt(V),
        sums=sums,
        mean_Sn=mean,
        V_Sn=V,
        segments=segments,
        segment_sums=segs if segments else None,
    )


@dataclass(frozen=True)
class FitReport:
    ks_statistic: float
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    count: int

    def to_dict(self):
        return dict(self.__dict__)


def ks_statistic(x) -> float:
    """``sup_x |F_emp(x) - Phi(x)|`` from the sorted sample."""
    x = np.sort(np.asarray(x, dtype=float))
    N = x.size
    cdf = ndtr(x)
    i = np.arange(1, N + 1)
    return float(max((i / N - cdf).max(), (cdf - (i - 1) / N).max()))


def fit_normal(batch) -> FitReport:
    """One-sample KS distance to N(0, 1) and the first four moments."""
    x = np.asarray(batch.statistics if isinstance(batch, SampleBatch) else batch, dtype=float)
    if x.size < MIN_FIT_SAMPLES:
        raise TooFewSamplesError(f"need at least {MIN_FIT_SAMPLES} samples for a fit, got {x.size}")
    m = x.mean()
    c = x - m
    m2 = float(np.mean(c ** 2))
    m3 = float(np.mean(c ** 3))
    m4 = float(np.mean(c ** 4))
    skew = m3 / m2 ** 1.5 if m2 > 0 else 0.0
    kurt = m4 / m2 ** 2 - 3.0 if m2 > 0 else 0.0
    return FitReport(ks_statistic(x), float(m), m2, skew, kurt, int(x.size))


def ks_null_quantile(count: int, q: float = 0.99) -> float:
    return float(kstwo(count).ppf(q))


def ks_null_std(count: int) -> float:
    return float(kstwo(count).std())


def case_a_spec(n: int) -> ChainSpec:
    """Homogeneous Q(1/n) from uniform, counting visits to the first state."""
    return build_homogeneous(flip_kernel(1.0 / n), [1.0, 0.0], n)


def case_b_spec(n: int) -> ChainSpec:
    """Homogeneous Q(1 - 1/n) from uniform, counting visits to the first state."""
    return build_homogeneous(flip_kernel(1.0 - 1.0 / n), [1.0, 0.0], n)


@dataclass(frozen=True)
class CaseABProfile:
    """Exact variance sequences of the slow- and fast-switching chains.

    ``scaled_var_a[k] = V(T_n)/n^2`` for Q(1/n); ``var_b[k] = V(T_n)`` for
    Q(1 - 1/n).  Histograms are filled only when samples were requested:
    ``hist_a`` of ``T_n/n`` on ``hist_a_edges`` and ``hist_b`` mapping
    ``T_n - (n+1)/2`` to counts, both for the largest ``n``.
    """

    ns: tuple
    scaled_var_a: tuple
    var_b: tuple
    hist_a: Optional[np.ndarray] = None
    hist_a_edges: Optional[np.ndarray] = None
    hist_b: Optional[dict] = None

    @staticmethod
    def differences(seq):
        return np.abs(np.diff(np.asarray(seq)))

    @staticmethod
    def limit_estimate(seq):
        """Last value plus a geometric tail fitted to the last two differences.

        Returns ``(limit, error)``; the error bar is the size of the added tail.
        """
        d = np.diff(np.asarray(seq, dtype=float))
        if d.size < 2 or d[-2] == 0.0:
            return float(seq[-1]), math.inf
        r = d[-1] / d[-2]
        if not 0.0 <= r < 1.0:
            return float(seq[-1]), math.inf
        tail = d[-1] * r / (1.0 - r)
        return float(seq[-1] + tail), float(abs(tail))

    def to_dict(self):
        out = {"ns": list(self.ns), "scaled_var_a": list(self.scaled_var_a), "var_b": list(self.var_b)}
        if self.hist_a is not None:
            out["hist_a"] = self.hist_a.tolist()
            out["hist_a_edges"] = self.hist_a_edges.tolist()
            out["hist_b"] = {str(k): v for k, v in self.hist_b.items()}
        return out


def case_ab_profiles(ns, count: int = 0, seed: int = DEFAULT_SEED, bins: int = 20) -> CaseABProfile:
    ns = tuple(int(n) for n in ns)
    va = tuple(variance_of_sum(case_a_spec(n)) / n ** 2 for n in ns)
    vb = tuple(variance_of_sum(case_b_spec(n)) for n in ns)
    if count <= 0:
        return CaseABProfile(ns, va, vb)
    n = max(ns)
    ta, _ = simulate_sums(case_a_spec(n), count, seed)
    tb, _ = simulate_sums(case_b_spec(n), count, seed + 1)
    hist, edges = np.histogram(ta / n, bins=bins, range=(0.0, 1.0))
    centred = tb - (n + 1) / 2.0
    keys, counts = np.unique(centred, return_counts=True)
    return CaseABProfile(ns, va, vb, hist, edges, dict(zip(keys.tolist(), counts.tolist())))


def _flip_count_law(length: int, p: float) -> np.ndarray:
    """Law of the number of visits to the first state by a uniform-start Q(p) walk."""
    d = np.zeros((2, length + 1))
    d[0, 1] = d[1, 0] = 0.5
    for _ in range(length - 1):
        nd = np.empty_like(d)
        nd[0, 0] = 0.0
        nd[0, 1:] = (1.0 - p) * d[0, :-1] + p * d[1, :-1]
        nd[1] = (1.0 - p) * d[1] + p * d[0]
        d = nd
    return d.sum(axis=0)


def _convolve(a, b):
    c = np.clip(fftconvolve(a, b), 0.0, None)
    return c / c.sum()


def _convolution_power(law, m: int) -> np.ndarray:
    out, base = np.ones(1), law
    while m:
        if m & 1:
            out = _convolve(out, base)
        m >>= 1
        if m:
            base = _convolve(base, base)
    return out


def block_chain_law(n: int, a: float) -> np.ndarray:
    """Exact law of ``T_n`` for the block chain of :func:`build_dobrushin_example`.

    The fair-coin steps make the blocks independent, so the law is the
    convolution of one slow block of length ``b = floor(1/a)``, ``m - 1``
    fast blocks of length ``b`` and a fast remainder, with ``m = n // b``.
    Entry ``k`` is ``P(T_n = k)``.
    """
    b = dobrushin_block_size(a)
    m, rest = divmod(n, b)
    law = _convolve(_flip_count_law(b, a), _convolution_power(_flip_count_law(b, 1.0 - a), m - 1))
    if rest:
        law = _convolve(law, _flip_count_law(rest, 1.0 - a))
    return law


def lattice_ks_distance(pmf) -> float:
    """KS distance to N(0, 1) of a lattice law on ``0..K`` after exact standardization."""
    pmf = np.asarray(pmf, dtype=float)
    k = np.arange(pmf.size)
    mean = float(k @ pmf)
    sd = math.sqrt(float(((k - mean) ** 2) @ pmf))
    cdf = np.cumsum(pmf)
    phi = ndtr((k - mean) / sd)
    left = np.concatenate([[0.0], cdf[:-1]])
    return float(max(np.abs(cdf - phi).max(), np.abs(left - phi).max()))


def lattice_excess_kurtosis(pmf) -> float:
    pmf = np.asarray(pmf, dtype=float)
    k = np.arange(pmf.size)
    c = k - float(k @ pmf)
    v = float((c * c) @ pmf)
    return float((c ** 4) @ pmf) / v ** 2 - 3.0
