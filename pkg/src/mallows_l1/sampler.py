"""The hit-and-run Markov chain for the L1 permutation model.

One step from state sigma0 has two parts:

  1. draw per-place cutoffs b_p = max(p, sigma0(p)) + E_p with E_p
     independent exponentials of rate 2*beta;
  2. resample sigma uniformly from {tau : tau(p) <= b_p for all p} by
     placing symbols n, n-1, ..., 1, each at a uniform choice among the
     not-yet-used places p with b_p >= symbol.

The additive-exponential form of part 1 is the inverse-CDF transform of
drawing u_p uniformly on [0, exp(-2*beta*(sigma0(p)-p)_+)] and setting
b_p = p - log(u_p)/(2*beta); it never underflows, whatever beta times
displacement is.  The chain leaves the model distribution invariant.

Randomness: each chain owns a counter-based Philox stream keyed by
(master_seed, chain_id) and consumes exactly 2n uniforms per step, so
output is reproducible no matter how chains are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from . import _kernels
from .permutation import ModelParams, Permutation

__all__ = [
    "InvariantViolation",
    "Bounds",
    "PlacementTrace",
    "ChainConfig",
    "ChainSample",
    "default_burnin",
    "chain_rng",
    "sample_bounds",
    "counts_from_bounds",
    "place_symbols",
    "hit_and_run_step",
    "run_chain",
    "iter_chain_blocks",
]


class InvariantViolation(RuntimeError):
    """An internal structural invariant failed; indicates a bug, not bad input."""


@dataclass(frozen=True)
class Bounds:
    """Per-place cutoffs b (floats, b[p-1] >= p) and the derived counts N.

    counts[j-1] is the number of eligible unused places at the moment
    symbol j is placed; it is always >= 1.
    """

    b: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class PlacementTrace:
    """Placement outcome: y[j-1] is the place that received symbol j."""

    y: np.ndarray
    result: Permutation


@dataclass(frozen=True)
class ChainConfig:
    params: ModelParams
    samples: int
    master_seed: int
    burnin: int | None = None
    thin: int = 1
    chains: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.burnin is not None and self.burnin < 0:
            raise ValueError("burnin must be >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")

    @property
    def effective_burnin(self) -> int:
        return default_burnin(self.params.n) if self.burnin is None else self.burnin

    def samples_per_chain(self) -> list[int]:
        base, extra = divmod(self.samples, self.chains)
        return [base + (1 if c < extra else 0) for c in range(self.chains)]


class ChainSample(NamedTuple):
    chain: int
    step: int
    permutation: Permutation


def default_burnin(n: int) -> int:
    """10 * n * ceil(log2(n + 1)) steps; empirically validated, overridable."""
    return 10 * n * math.ceil(math.log2(n + 1))


def chain_rng(master_seed: int, chain_id: int = 0) -> np.random.Generator:
    """The Philox stream for one chain of a run."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(chain_id,))
    return np.random.Generator(np.random.Philox(seq))


def sample_bounds(sigma0: Permutation, beta: float, rng: np.random.Generator) -> Bounds:
    """Draw the cutoff vector for one step started from sigma0."""
    if not beta > 0:
        raise ValueError(f"beta must be strictly positive, got {beta}")
    n = sigma0.n
    places = np.arange(1, n + 1)
    u = rng.random(n)
    b = np.maximum(places, sigma0.images) - np.log1p(-u) / (2.0 * beta)
    assert np.all(b >= np.maximum(places, sigma0.images))
    return Bounds(b=b, counts=counts_from_bounds(b))


def counts_from_bounds(b: np.ndarray) -> np.ndarray:
    """Eligible-place counts N_j = |{k : b_k >= j}| - n + j, for j = 1..n."""
    b = np.asarray(b, dtype=np.float64)
    n = b.size
    places = np.arange(1, n + 1)
    if np.any(b < places):
        bad = int(np.argmax(b < places)) + 1
        raise InvariantViolation(f"cutoff b_{bad} = {b[bad - 1]} < {bad}")
    below = np.searchsorted(np.sort(b), places, side="left")
    counts = places - below
    if np.any(counts < 1):
        raise InvariantViolation("eligible-place count dropped below 1")
    return counts


def place_symbols(b: np.ndarray, rng: np.random.Generator) -> PlacementTrace:
    """Place symbols n..1 uniformly among eligible places; uniform over
    {tau : tau(p) <= b_p for all p}."""
    b = np.asarray(b, dtype=np.float64)
    n = b.size
    if np.any(b < np.arange(1, n + 1)):
        raise InvariantViolation("placement requires b_p >= p for every place")
    u = rng.random(n)
    y, images = _kernels.place_from_bounds(b, u)
    result = Permutation(images, _validate=False)
    assert np.all(images <= b)
    return PlacementTrace(y=y, result=result)


def hit_and_run_step(sigma: Permutation, beta: float, rng: np.random.Generator) -> Permutation:
    """One full chain step: cutoffs, then uniform placement."""
    bounds = sample_bounds(sigma, beta, rng)
    return place_symbols(bounds.b, rng).result


def iter_chain_blocks(
    params: ModelParams,
    chain_id: int,
    master_seed: int,
    burnin: int,
    thin: int,
    count: int,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Array-level fast path for one chain: yields (steps, states) blocks.

    The chain starts at the identity, runs `burnin` steps, then emits the
    state at steps burnin + thin, burnin + 2*thin, ... as rows of int64
    image matrices.  Exactly `count` rows are produced across blocks.
    """
    n = params.n
    two_beta = 2.0 * params.beta
    rng = chain_rng(master_seed, chain_id)
    sigma = np.arange(1, n + 1, dtype=np.int64)
    total_steps = burnin + count * thin
    block_steps = max(1, min(65536, 2_000_000 // (2 * n), total_steps))
    done = 0
    while done < total_steps:
        t = min(block_steps, total_steps - done)
        u = rng.random((t, 2 * n))
        # absolute emit steps are burnin + i*thin, i >= 1; take those in (done, done + t]
        lo = done + 1
        hi = done + t
        i0 = max(1, math.ceil((lo - burnin) / thin))
        start = burnin + i0 * thin
        emits_abs = np.arange(start, hi + 1, thin, dtype=np.int64)
        emit_steps = emits_abs - done - 1
        out = np.empty((emit_steps.size, n), dtype=np.int64)
        _kernels.chain_block(sigma, u, two_beta, emit_steps, out)
        if emit_steps.size:
            yield emits_abs, out
        done += t


def run_chain(config: ChainConfig) -> Iterator[ChainSample]:
    """Run the configured chains and yield samples in chain-id order.

    Deterministic given master_seed: each chain draws from its own keyed
    stream, so any execution schedule gives the same output.
    """
    burnin = config.effective_burnin
    for chain_id, count in enumerate(config.samples_per_chain()):
        if count == 0:
            continue
        for steps, states in iter_chain_blocks(
            config.params, chain_id, config.master_seed, burnin, config.thin, count
        ):
            for step, row in zip(steps, states):
                yield ChainSample(
                    chain=chain_id,
                    step=int(step),
                    permutation=Permutation(row, _validate=False),
                )
