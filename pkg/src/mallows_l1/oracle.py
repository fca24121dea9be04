"""Brute-force enumeration of S_n for small n: the ground truth oracle.

Everything here evaluates the model P(sigma) = exp(-beta * H(sigma, id)) / Z
exactly by streaming over all n! permutations, so n is capped at
ORACLE_MAX_N.  A full probability table is materialized only up to
TABLE_MAX_N (8! = 40320 entries); beyond that the oracle streams.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .permutation import ModelParams, Permutation

__all__ = [
    "ORACLE_MAX_N",
    "TABLE_MAX_N",
    "OracleLimitError",
    "ExactModel",
    "partition_function",
    "exact_probability",
    "exact_expectation",
    "exact_tail_distribution_D",
    "total_variation_distance",
]

ORACLE_MAX_N = 10
TABLE_MAX_N = 8

_CHUNK = 100_000


class OracleLimitError(ValueError):
    """Raised when an exact computation is requested beyond the n! budget."""


def _check_enumerable(n: int, limit: int = ORACLE_MAX_N) -> None:
    if n > limit:
        raise OracleLimitError(
            f"exact enumeration supports n <= {limit}, got n = {n}; "
            "use the Monte Carlo sampler for larger n"
        )


def _image_chunks(n: int, chunk: int = _CHUNK):
    """Yield (m, n) int64 arrays of one-based images covering S_n."""
    it = itertools.permutations(range(1, n + 1))
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.int64)


def _chunk_weights(images: np.ndarray, beta: float) -> np.ndarray:
    places = np.arange(1, images.shape[1] + 1)
    h = np.abs(images - places).sum(axis=1)
    return np.exp(-beta * h)


@lru_cache(maxsize=128)
def _partition_function_cached(n: int, beta: float) -> float:
    # fsum over per-chunk pairwise sums keeps the near-equal terms at small
    # beta from losing digits across the 10! accumulation.
    return math.fsum(float(_chunk_weights(c, beta).sum()) for c in _image_chunks(n))


def partition_function(params: ModelParams) -> float:
    """The normalizing constant Z = sum over S_n of exp(-beta * H(sigma, id))."""
    _check_enumerable(params.n)
    return _partition_function_cached(params.n, params.beta)


def exact_probability(sigma: Permutation, params: ModelParams) -> float:
    """P(sigma) = exp(-beta * H(sigma, id)) / Z, exactly."""
    _check_enumerable(params.n)
    if sigma.n != params.n:
        raise ValueError(f"permutation has n = {sigma.n}, params have n = {params.n}")
    h = np.abs(sigma.images - np.arange(1, params.n + 1)).sum()
    return math.exp(-params.beta * h) / partition_function(params)


class ExactModel:
    """Partition function plus (for n <= TABLE_MAX_N) the full probability table."""

    def __init__(self, params: ModelParams, materialize: bool | None = None):
        _check_enumerable(params.n)
        self.params = params
        self.z = partition_function(params)
        if materialize is None:
            materialize = params.n <= TABLE_MAX_N
        self.table: dict[tuple[int, ...], float] | None = None
        if materialize:
            if params.n > TABLE_MAX_N:
                raise OracleLimitError(
                    f"probability table materialization supports n <= {TABLE_MAX_N}"
                )
            table = {}
            for chunk in _image_chunks(params.n):
                probs = _chunk_weights(chunk, params.beta) / self.z
                for row, p in zip(chunk, probs):
                    table[tuple(int(v) for v in row)] = float(p)
            self.table = table

    def probability(self, sigma: Permutation | tuple[int, ...]) -> float:
        key = sigma.as_tuple() if isinstance(sigma, Permutation) else tuple(sigma)
        if self.table is not None:
            return self.table[key]
        return exact_probability(Permutation(key), self.params)


def exact_expectation(params: ModelParams, f: Callable[[Permutation], float]) -> float:
    """E[f(sigma)] by streaming enumeration; no table required."""
    _check_enumerable(params.n)
    z = partition_function(params)
    partials = []
    for chunk in _image_chunks(params.n):
        weights = _chunk_weights(chunk, params.beta)
        vals = np.fromiter(
            (f(Permutation(row, _validate=False)) for row in chunk),
            dtype=np.float64,
            count=chunk.shape[0],
        )
        partials.append(float(np.dot(vals, weights)))
    return math.fsum(partials) / z


def exact_tail_distribution_D(params: ModelParams, j: int) -> dict[int, float]:
    """Exact survival function r -> P(|D_j(sigma)| >= r) for r = 0..n.

    D_j is the set of places k <= j whose symbol exceeds j; its size is
    at most min(j, n - j), so the tail vanishes well before r = n.
    """
    _check_enumerable(params.n)
    n = params.n
    if not 1 <= j <= n:
        raise ValueError(f"index {j} outside [1, {n}]")
    mass = np.zeros(n + 1)
    for chunk in _image_chunks(n):
        weights = _chunk_weights(chunk, params.beta)
        d = (chunk[:, :j] >= j + 1).sum(axis=1)
        mass += np.bincount(d, weights=weights, minlength=n + 1)
    z = partition_function(params)
    survival = np.cumsum(mass[::-1])[::-1] / z
    return {r: float(survival[r]) for r in range(n + 1)}


def total_variation_distance(
    empirical: Mapping[Permutation | tuple[int, ...], float], exact: ExactModel
) -> float:
    """Half the L1 distance between empirical frequencies and the exact table.

    `empirical` maps permutations to raw counts (any nonnegative weights);
    permutations of S_n with zero empirical mass contribute their full
    exact probability.
    """
    if exact.table is None:
        raise OracleLimitError(
            f"total variation needs a materialized table (n <= {TABLE_MAX_N})"
        )
    n = exact.params.n
    counts: dict[tuple[int, ...], float] = {}
    for key, c in empirical.items():
        tup = key.as_tuple() if isinstance(key, Permutation) else tuple(key)
        if len(tup) != n:
            raise ValueError(f"empirical key {tup} has wrong length for n = {n}")
        if tup not in exact.table:
            raise ValueError(f"empirical key {tup} is not a permutation of [{n}]")
        counts[tup] = counts.get(tup, 0.0) + float(c)
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("empirical frequencies must have positive total mass")
    acc = 0.0
    for tup, p in exact.table.items():
        acc += abs(counts.get(tup, 0.0) / total - p)
    return 0.5 * acc
