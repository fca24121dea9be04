"""Cycle-statistic summaries, Monte Carlo estimators, and reference laws.

Estimator error bars come from independent chains: each chain folds a
(count, sum, sum of squares) aggregate, chains are merged in chain-id
order, and the standard error is the between-chain spread.  Reference
laws for the large-n comparisons are the uniform permutation (Fisher-
Yates) and the size-biased stick-breaking masses whose descending sort
is the Poisson-Dirichlet(1) law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .permutation import ModelParams, Permutation, cycle_decomposition
from .sampler import ChainConfig, iter_chain_blocks

__all__ = [
    "CycleSummary",
    "EstimateWithError",
    "summarize",
    "mc_cycle_estimates",
    "estimate_cycle_length",
    "estimate_cycle_diameter",
    "normalized_sorted_lengths",
    "gem_stick_breaking",
    "uniform_permutation_reference",
    "ks_statistic",
    "ks_two_sample",
    "least_squares_slope",
    "loglog_slope",
]


@dataclass(frozen=True)
class CycleSummary:
    """Cycle lengths of one permutation plus the stats of a designated point s."""

    n: int
    sorted_lengths: tuple[int, ...]
    len_at_s: int
    diameter_at_s: int


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    std_error: float
    count: int


def summarize(sigma: Permutation, s: int) -> CycleSummary:
    """Sorted cycle lengths plus length and extent of the cycle through s."""
    if not 1 <= s <= sigma.n:
        raise ValueError(f"index {s} outside [1, {sigma.n}]")
    cycles = cycle_decomposition(sigma)
    lengths = tuple(sorted((len(c) for c in cycles), reverse=True))
    for cyc in cycles:
        if s in cyc:
            return CycleSummary(
                n=sigma.n,
                sorted_lengths=lengths,
                len_at_s=len(cyc),
                diameter_at_s=max(cyc) - min(cyc),
            )
    raise AssertionError("unreachable: cycles partition [n]")


def _chain_aggregate(params: ModelParams, chain_id: int, config: ChainConfig, s: int, count: int):
    """Fold (count, sum, sumsq) of cycle length and diameter over one chain."""
    tot = 0
    sums = np.zeros(2)
    sumsq = np.zeros(2)
    for _, states in iter_chain_blocks(
        params, chain_id, config.master_seed, config.effective_burnin, config.thin, count
    ):
        len_s, diam_s, _, _, _ = _kernels.batch_cycle_stats(states, s)
        tot += len_s.size
        sums += (len_s.sum(), diam_s.sum())
        sumsq += (np.dot(len_s, len_s), np.dot(diam_s, diam_s))
    return tot, sums, sumsq


def mc_cycle_estimates(
    params: ModelParams,
    s: int,
    config: ChainConfig,
    workers: int = 1,
) -> dict[str, EstimateWithError]:
    """Monte Carlo means of |C_s| and max(C_s) - min(C_s) with error bars.

    Returns {"length": ..., "diameter": ...}.  With several chains the
    standard error is the spread of per-chain means; a single chain
    falls back to the within-chain error (which ignores autocorrelation).
    """
    if not 1 <= s <= params.n:
        raise ValueError(f"index {s} outside [1, {params.n}]")
    counts = config.samples_per_chain()
    jobs = [(cid, cnt) for cid, cnt in enumerate(counts) if cnt > 0]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [
                pool.submit(_chain_aggregate, params, cid, config, s, cnt)
                for cid, cnt in jobs
            ]
            results = [f.result() for f in futs]
    else:
        results = [_chain_aggregate(params, cid, config, s, cnt) for cid, cnt in jobs]

    out = {}
    for k, name in enumerate(("length", "diameter")):
        total = sum(r[0] for r in results)
        grand = sum(r[1][k] for r in results)
        mean = grand / total
        chain_means = np.array([r[1][k] / r[0] for r in results])
        if len(results) >= 2:
            se = float(np.std(chain_means, ddof=1) / math.sqrt(len(results)))
        elif total >= 2:
            var = (results[0][2][k] - total * mean * mean) / (total - 1)
            se = float(math.sqrt(max(var, 0.0) / total))
        else:
            se = 0.0
        out[name] = EstimateWithError(mean=float(mean), std_error=se, count=total)
    return out


def estimate_cycle_length(
    params: ModelParams, s: int, config: ChainConfig, workers: int = 1
) -> EstimateWithError:
    """Monte Carlo E[|C_s|] with cross-chain standard error."""
    return mc_cycle_estimates(params, s, config, workers=workers)["length"]


def estimate_cycle_diameter(
    params: ModelParams, s: int, config: ChainConfig, workers: int = 1
) -> EstimateWithError:
    """Monte Carlo E[max(C_s) - min(C_s)] with cross-chain standard error."""
    return mc_cycle_estimates(params, s, config, workers=workers)["diameter"]


def normalized_sorted_lengths(samples, k: int = 20) -> np.ndarray:
    """Top-k sorted cycle lengths over n, one row per sample, zero padded.

    `samples` is a sequence of Permutations or an int64 matrix of
    one-based image rows.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(samples, np.ndarray) and samples.ndim == 2:
        states = np.ascontiguousarray(samples, dtype=np.int64)
    else:
        states = np.stack([p.images for p in samples]).astype(np.int64)
    n = states.shape[1]
    return _kernels.batch_top_lengths(states, k) / n


def gem_stick_breaking(
    rng: np.random.Generator,
    residual_tol: float = 1e-12,
    sort: bool = True,
) -> np.ndarray:
    """One draw of stick-breaking masses p_i = u_i * prod_{j<i} (1 - u_j).

    Breaking stops once the unbroken remainder falls below residual_tol;
    sorted descending (unless sort=False), the masses realize the
    Poisson-Dirichlet(1) law.
    """
    masses = []
    residual = 1.0
    for _ in range(100_000):
        u = rng.random()
        masses.append(residual * u)
        residual *= 1.0 - u
        if residual < residual_tol:
            break
    else:
        raise RuntimeError("stick breaking failed to exhaust the unit mass")
    out = np.array(masses)
    if sort:
        out = np.sort(out)[::-1]
    return out


def uniform_permutation_reference(n: int, rng: np.random.Generator, s: int = 1) -> CycleSummary:
    """Cycle summary of one uniformly random permutation (Fisher-Yates)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    images = rng.permutation(n) + 1
    return summarize(Permutation(images, _validate=False), s)


def _kolmogorov_sf(lam: float, terms: int = 40) -> float:
    """Asymptotic two-sided Kolmogorov survival function, 40-term series."""
    if lam <= 0:
        return 1.0
    total = 0.0
    for k in range(1, terms + 1):
        total += (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(sample: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]):
    """One-sample Kolmogorov-Smirnov statistic D and asymptotic p-value."""
    xs = np.sort(np.asarray(sample, dtype=np.float64))
    m = xs.size
    if m == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(xs), dtype=np.float64)
    grid = np.arange(1, m + 1) / m
    d = float(max((grid - f).max(), (f - (grid - 1 / m)).max()))
    sq = math.sqrt(m)
    return d, _kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)


def ks_two_sample(x: Sequence[float], y: Sequence[float]):
    """Two-sample Kolmogorov-Smirnov statistic D and asymptotic p-value."""
    xs = np.sort(np.asarray(x, dtype=np.float64))
    ys = np.sort(np.asarray(y, dtype=np.float64))
    n1, n2 = xs.size, ys.size
    if n1 == 0 or n2 == 0:
        raise ValueError("empty sample")
    both = np.concatenate([xs, ys])
    cdf1 = np.searchsorted(xs, both, side="right") / n1
    cdf2 = np.searchsorted(ys, both, side="right") / n2
    d = float(np.abs(cdf1 - cdf2).max())
    en = math.sqrt(n1 * n2 / (n1 + n2))
    return d, _kolmogorov_sf((en + 0.12 + 0.11 / en) * d)


def least_squares_slope(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of y on x with its standard error."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = x.size
    if m < 2 or np.unique(x).size < 2:
        raise ValueError("need at least two distinct x values")
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, y) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    if m == 2:
        return slope, 0.0
    resid = y - slope * x - intercept
    s2 = float(np.dot(resid, resid)) / (m - 2)
    return slope, math.sqrt(s2 / sxx)


def loglog_slope(points: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of log y on log x with its standard error."""
    pts = list(points)
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise ValueError("log-log fit needs strictly positive coordinates")
    return least_squares_slope(
        [math.log(x) for x, _ in pts], [math.log(y) for _, y in pts]
    )
