"""Verification experiments: each returns per-criterion pass/fail records.

These are the engines behind the CLI's `invariants` and `verify-*`
subcommands and the acceptance test suite.  Defaults reproduce the
published acceptance parameters; every experiment takes an explicit
seed and is deterministic given it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels, arcs, oracle, stats
from .permutation import ModelParams, Permutation, cycle_containing, cycle_decomposition
from .sampler import (
    ChainConfig,
    chain_rng,
    iter_chain_blocks,
    place_symbols,
    sample_bounds,
)

__all__ = [
    "DEFAULT_SEED",
    "CriterionRecord",
    "resolve_workers",
    "oracle_report",
    "verify_oracle_exactness",
    "verify_sampler_stationarity",
    "verify_expectation_match",
    "verify_cycle_length_slope",
    "verify_cycle_length_saturation",
    "verify_diameter_decay",
    "verify_poisson_dirichlet",
    "verify_arc_invariants",
    "verify_bounds_law",
    "verify_displacement_tail_decay",
]

DEFAULT_SEED = 20260809


@dataclass
class CriterionRecord:
    """One checked criterion: what was observed, what was required, verdict."""

    criterion: str
    observed: object
    expected: object
    tolerance: object
    passed: bool
    detail: dict = field(default_factory=dict)


def resolve_workers(chains: int) -> int:
    """Worker pool size: chain count capped by MALLOWS_THREADS (or cpu count)."""
    cap = os.environ.get("MALLOWS_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(chains, limit))


# ---------------------------------------------------------------------------
# oracle data report


def oracle_report(
    params: ModelParams,
    s: int | None = None,
    tail_js: Sequence[int] | None = None,
) -> dict:
    """Exact model summary: z, a few expectations, displacement tails."""
    n = params.n
    s = (n + 1) // 2 if s is None else s
    if tail_js is None:
        tail_js = sorted({1, (n + 1) // 2, n})
    z = oracle.partition_function(params)
    exps = {
        "l1_to_identity": oracle.exact_expectation(
            params, lambda p: float(np.abs(p.images - np.arange(1, n + 1)).sum())
        ),
        f"cycle_len_{s}": oracle.exact_expectation(
            params, lambda p: stats.summarize(p, s).len_at_s
        ),
        f"cycle_diam_{s}": oracle.exact_expectation(
            params, lambda p: stats.summarize(p, s).diameter_at_s
        ),
    }
    tails = {
        str(j): {str(r): v for r, v in oracle.exact_tail_distribution_D(params, j).items()}
        for j in tail_js
    }
    return {"n": n, "beta": params.beta, "z": z, "expectations": exps, "tails": tails}


# ---------------------------------------------------------------------------
# criterion 1: oracle exactness


def verify_oracle_exactness(betas: Sequence[float] = (0.1, 1.0, 5.0)) -> list[CriterionRecord]:
    records = []
    for beta in betas:
        z2 = oracle.partition_function(ModelParams(2, beta))
        want2 = 1.0 + math.exp(-2.0 * beta)
        records.append(
            CriterionRecord(
                criterion=f"oracle-z-n2-beta{beta:g}",
                observed=z2,
                expected=want2,
                tolerance=1e-12,
                passed=abs(z2 - want2) <= 1e-12,
            )
        )
        z3 = oracle.partition_function(ModelParams(3, beta))
        want3 = 1.0 + 2.0 * math.exp(-2.0 * beta) + 3.0 * math.exp(-4.0 * beta)
        records.append(
            CriterionRecord(
                criterion=f"oracle-z-n3-beta{beta:g}",
                observed=z3,
                expected=want3,
                tolerance=1e-12,
                passed=abs(z3 - want3) <= 1e-12,
            )
        )
    total = oracle.exact_expectation(ModelParams(6, 1.0), lambda p: 1.0)
    records.append(
        CriterionRecord(
            criterion="oracle-prob-sum-n6",
            observed=total,
            expected=1.0,
            tolerance=1e-10,
            passed=abs(total - 1.0) <= 1e-10,
        )
    )
    return records


# ---------------------------------------------------------------------------
# criterion 2: sampler stationarity (TVD against the exact table)


def _empirical_counts(params: ModelParams, config: ChainConfig) -> dict[tuple[int, ...], int]:
    """Sample the chain and histogram states (n small enough to encode)."""
    n = params.n
    pows = (n + 0.0) ** np.arange(n)
    enc_counts: dict[int, int] = {}
    decode: dict[int, tuple[int, ...]] = {}
    for chain_id, count in enumerate(config.samples_per_chain()):
        if count == 0:
            continue
        for _, states in iter_chain_blocks(
            params, chain_id, config.master_seed, config.effective_burnin, config.thin, count
        ):
            enc = ((states - 1) @ pows).astype(np.int64)
            uniq, cnts = np.unique(enc, return_counts=True)
            for e, c in zip(uniq, cnts):
                e = int(e)
                enc_counts[e] = enc_counts.get(e, 0) + int(c)
        # keep one decoded representative per new encoding
    # decode encodings back to image tuples
    out: dict[tuple[int, ...], int] = {}
    for e, c in enc_counts.items():
        digits = []
        rem = e
        for _ in range(n):
            digits.append(rem % n + 1)
            rem //= n
        out[tuple(digits)] = c
    return out


def verify_sampler_stationarity(
    n: int = 5,
    betas: Sequence[float] = (0.3, 1.0),
    samples: int = 1_000_000,
    chains: int = 4,
    burnin: int | None = None,
    thin: int = 1,
    seed: int = DEFAULT_SEED,
    tol: float = 0.02,
) -> list[CriterionRecord]:
    records = []
    for beta in betas:
        params = ModelParams(n, beta)
        exact = oracle.ExactModel(params)
        config = ChainConfig(
            params=params,
            samples=samples,
            master_seed=seed,
            burnin=burnin,
            thin=thin,
            chains=chains,
        )
        counts = _empirical_counts(params, config)
        tvd = oracle.total_variation_distance(counts, exact)
        records.append(
            CriterionRecord(
                criterion=f"stationarity-tvd-n{n}-beta{beta:g}",
                observed=tvd,
                expected=0.0,
                tolerance=tol,
                passed=tvd <= tol,
                detail={"samples": samples, "chains": chains, "burnin": config.effective_burnin},
            )
        )
    return records


# ---------------------------------------------------------------------------
# criterion 3: Monte Carlo expectations match the exact oracle


def verify_expectation_match(
    n: int = 8,
    betas: Sequence[float] = (0.25, 1.0, 2.0),
    s_values: Sequence[int] = (1, 4),
    samples: int = 320_000,
    chains: int = 16,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> list[CriterionRecord]:
    records = []
    for beta in betas:
        params = ModelParams(n, beta)
        for s in s_values:
            exact_len = oracle.exact_expectation(params, lambda p: stats.summarize(p, s).len_at_s)
            exact_diam = oracle.exact_expectation(
                params, lambda p: stats.summarize(p, s).diameter_at_s
            )
            config = ChainConfig(
                params=params, samples=samples, master_seed=seed, chains=chains
            )
            est = stats.mc_cycle_estimates(params, s, config, workers=workers)
            for name, exact_val in (("len", exact_len), ("diam", exact_diam)):
                e = est["length"] if name == "len" else est["diameter"]
                tol = 3.0 * e.std_error
                records.append(
                    CriterionRecord(
                        criterion=f"exact-match-{name}-n{n}-beta{beta:g}-s{s}",
                        observed=e.mean,
                        expected=exact_val,
                        tolerance=tol,
                        passed=abs(e.mean - exact_val) <= tol,
                        detail={"std_error": e.std_error, "samples": e.count},
                    )
                )
    return records


# ---------------------------------------------------------------------------
# criteria 4 and 5: cycle length scaling in beta and saturation at n


def verify_cycle_length_slope(
    n: int = 50_000,
    s: int | None = None,
    betas: Sequence[float] = (0.02, 0.04, 0.08),
    samples_per_point: int = 400,
    chains: int = 4,
    burnin: int = 1500,
    thin: int = 10,
    seed: int = DEFAULT_SEED,
    slope_window: tuple[float, float] = (-2.4, -1.6),
    workers: int = 1,
) -> list[CriterionRecord]:
    s = n // 2 if s is None else s
    points = []
    detail = {}
    for beta in betas:
        params = ModelParams(n, beta)
        config = ChainConfig(
            params=params,
            samples=samples_per_point,
            master_seed=seed,
            burnin=burnin,
            thin=thin,
            chains=chains,
        )
        est = stats.estimate_cycle_length(params, s, config, workers=workers)
        points.append((beta, est.mean))
        detail[f"mean-beta{beta:g}"] = est.mean
        detail[f"se-beta{beta:g}"] = est.std_error
    slope, slope_se = stats.loglog_slope(points)
    lo, hi = slope_window
    return [
        CriterionRecord(
            criterion=f"cycle-length-slope-n{n}",
            observed=slope,
            expected="in [-2.4, -1.6] (inverse-square law in beta)",
            tolerance=f"[{lo}, {hi}]",
            passed=lo <= slope <= hi,
            detail={**detail, "slope_se": slope_se, "samples_per_point": samples_per_point},
        )
    ]


def verify_cycle_length_saturation(
    ns: Sequence[int] = (200, 400, 800),
    beta: float = 0.001,
    samples: int = 2000,
    chains: int = 4,
    burnin: int | None = None,
    thin: int = 5,
    seed: int = DEFAULT_SEED,
    frac_window: tuple[float, float] = (0.2, 0.9),
    ratio_window: tuple[float, float] = (1.6, 2.4),
    workers: int = 1,
) -> list[CriterionRecord]:
    records = []
    means = []
    for n in ns:
        params = ModelParams(n, beta)
        config = ChainConfig(
            params=params,
            samples=samples,
            master_seed=seed,
            burnin=burnin,
            thin=thin,
            chains=chains,
        )
        est = stats.estimate_cycle_length(params, n // 2, config, workers=workers)
        means.append(est.mean)
        frac = est.mean / n
        lo, hi = frac_window
        records.append(
            CriterionRecord(
                criterion=f"cycle-length-saturation-frac-n{n}",
                observed=frac,
                expected="E[|C_s|]/n of constant order",
                tolerance=f"[{lo}, {hi}]",
                passed=lo <= frac <= hi,
                detail={"mean": est.mean, "std_error": est.std_error},
            )
        )
    for (n1, m1), (n2, m2) in zip(zip(ns, means), zip(ns[1:], means[1:])):
        ratio = m2 / m1
        lo, hi = ratio_window
        records.append(
            CriterionRecord(
                criterion=f"cycle-length-saturation-ratio-n{n1}-to-n{n2}",
                observed=ratio,
                expected="proportional growth in n (ratio near 2)",
                tolerance=f"[{lo}, {hi}]",
                passed=lo <= ratio <= hi,
            )
        )
    return records


# ---------------------------------------------------------------------------
# criterion 6: diameter decay in beta


def verify_diameter_decay(
    n: int = 100,
    s: int | None = None,
    betas: Sequence[float] = (1.5, 2.0, 2.5, 3.0),
    samples_per_point: int = 1_000_000,
    chains: int = 4,
    burnin: int | None = None,
    thin: int = 1,
    seed: int = DEFAULT_SEED,
    slope_window: tuple[float, float] = (-2.5, -1.5),
    workers: int = 1,
) -> list[CriterionRecord]:
    s = n // 2 if s is None else s
    detail = {}
    xs, ys = [], []
    for beta in betas:
        params = ModelParams(n, beta)
        config = ChainConfig(
            params=params,
            samples=samples_per_point,
            master_seed=seed,
            burnin=burnin,
            thin=thin,
            chains=chains,
        )
        est = stats.estimate_cycle_diameter(params, s, config, workers=workers)
        xs.append(beta)
        ys.append(math.log(est.mean))
        detail[f"mean-beta{beta:g}"] = est.mean
        detail[f"se-beta{beta:g}"] = est.std_error
    slope, slope_se = stats.least_squares_slope(xs, ys)
    lo, hi = slope_window
    return [
        CriterionRecord(
            criterion=f"cycle-diameter-decay-n{n}",
            observed=slope,
            expected="log E[diameter] falling like -2 per unit beta",
            tolerance=f"[{lo}, {hi}]",
            passed=lo <= slope <= hi,
            detail={**detail, "slope_se": slope_se, "samples_per_point": samples_per_point},
        )
    ]


# ---------------------------------------------------------------------------
# criteria 7 and 8: small-beta limit laws


def verify_poisson_dirichlet(
    n: int = 10_000,
    samples: int = 2000,
    chains: int = 4,
    burnin: int = 1000,
    thin: int = 10,
    seed: int = DEFAULT_SEED,
    top_k: int = 40,
    ks_uniform_tol: float = 0.06,
    moment_tol: float = 0.05,
    ks_two_tol: float = 0.08,
    workers: int = 1,
) -> list[CriterionRecord]:
    beta = n ** (-0.6)
    s = n // 2
    params = ModelParams(n, beta)
    config = ChainConfig(
        params=params, samples=samples, master_seed=seed, burnin=burnin, thin=thin, chains=chains
    )
    len_fracs: list[np.ndarray] = []
    largest_fracs: list[np.ndarray] = []
    sumsq: list[np.ndarray] = []
    for chain_id, count in enumerate(config.samples_per_chain()):
        if count == 0:
            continue
        for _, states in iter_chain_blocks(
            params, chain_id, seed, burnin, thin, count
        ):
            len_s, _, _, _, sq = _kernels.batch_cycle_stats(states, s)
            top = _kernels.batch_top_lengths(states, 1)
            len_fracs.append(len_s / n)
            largest_fracs.append(top[:, 0] / n)
            sumsq.append(sq / (n * n))
    len_frac = np.concatenate(len_fracs)
    largest = np.concatenate(largest_fracs)
    moment = float(np.concatenate(sumsq).mean())

    d_unif, _ = stats.ks_statistic(len_frac, lambda x: np.clip(x, 0.0, 1.0))
    gem_rng = chain_rng(seed, 999_983)
    gem_largest = np.array(
        [gem_stick[0] for gem_stick in (stats.gem_stick_breaking(gem_rng) for _ in range(samples))]
    )
    d_two, _ = stats.ks_two_sample(largest, gem_largest)
    uniform_moment = 1.0 / n + (n - 1) / (2.0 * n)

    return [
        CriterionRecord(
            criterion=f"uniform-cycle-fraction-ks-n{n}",
            observed=d_unif,
            expected="|C_s|/n uniform on [0,1]",
            tolerance=ks_uniform_tol,
            passed=d_unif < ks_uniform_tol,
            detail={"beta": beta, "samples": int(len_frac.size)},
        ),
        CriterionRecord(
            criterion=f"sorted-length-square-moment-n{n}",
            observed=moment,
            expected=uniform_moment,
            tolerance=moment_tol,
            passed=abs(moment - uniform_moment) <= moment_tol,
        ),
        CriterionRecord(
            criterion=f"largest-part-vs-stick-breaking-ks-n{n}",
            observed=d_two,
            expected="largest cycle fraction matches Poisson-Dirichlet(1) largest mass",
            tolerance=ks_two_tol,
            passed=d_two < ks_two_tol,
            detail={"gem_samples": samples},
        ),
    ]


# ---------------------------------------------------------------------------
# criterion 9: arc bookkeeping invariants on full replays


def _run_one_replay(n: int, beta: float, rng: np.random.Generator) -> list[str]:
    """Replay one placement with full instrumentation; return violations."""
    violations: list[str] = []
    sigma0 = Permutation(rng.permutation(n) + 1, _validate=False)
    bounds = sample_bounds(sigma0, beta, rng)
    trace = place_symbols(bounds.b, rng)
    result = trace.result
    counts = bounds.counts

    if sorted(trace.y.tolist()) != list(range(1, n + 1)):
        violations.append("placement trace is not a bijection")
    if np.any(result.images > bounds.b):
        violations.append("feasibility: some sigma(p) > b_p")

    tracker = arcs.ArcTracker(bounds.b)
    for l in range(n, 0, -1):
        h_prime, h = arcs.available_heads(tracker, l)
        if h_prime != h | {l}:
            violations.append(f"head sets at step {l}: H' != H + {{l}}")
        if len(h) != counts[l - 1] - 1 or len(h_prime) != counts[l - 1]:
            violations.append(f"head set sizes at step {l} disagree with N_{l}")
        tracker.transition(l, int(trace.y[l - 1]))
    try:
        tracker.check_partition()
    except Exception as exc:
        violations.append(f"partition check failed: {exc}")
    if tracker.open_arcs():
        violations.append("open arcs remain at step 1")
    if tracker.closed_cycles() != cycle_decomposition(result):
        violations.append("closed arcs at step 1 differ from the output cycles")

    s = int(rng.integers(1, n + 1))
    walk = arcs.track_walk(s, bounds.b, trace.y)
    live = walk.z[: walk.t_stop]
    if any(a <= b for a, b in zip(live[1:], live)):
        violations.append("walk z not strictly decreasing while live")
    if walk.terminal != min(cycle_containing(result, s)):
        violations.append("walk terminal differs from cycle minimum")
    return violations


def verify_arc_invariants(
    ns: Sequence[int] = (20, 200),
    replays: int = 1000,
    betas: Sequence[float] = (0.1, 0.5, 2.0),
    seed: int = DEFAULT_SEED,
) -> list[CriterionRecord]:
    records = []
    for n in ns:
        rng = chain_rng(seed, n)
        violations: list[str] = []
        for r in range(replays):
            beta = betas[r % len(betas)]
            violations.extend(_run_one_replay(n, beta, rng))
        records.append(
            CriterionRecord(
                criterion=f"arc-invariants-n{n}",
                observed=len(violations),
                expected=0,
                tolerance=0,
                passed=not violations,
                detail={"replays": replays, "first_violations": violations[:5]},
            )
        )
    return records


# ---------------------------------------------------------------------------
# criterion 10: cutoff law (offsets are Exp(2 beta))


def verify_bounds_law(
    betas: Sequence[float] = (0.5, 4.0),
    draws: int = 100_000,
    n: int = 100,
    survival_points: Sequence[float] = (0.75, 0.5, 0.25),
    seed: int = DEFAULT_SEED,
) -> list[CriterionRecord]:
    records = []
    for beta in betas:
        rng = chain_rng(seed, int(beta * 1000))
        sigma0 = Permutation(rng.permutation(n) + 1, _validate=False)
        base = np.maximum(np.arange(1, n + 1), sigma0.images)
        reps = draws // n
        offsets = np.empty(reps * n)
        for i in range(reps):
            b = sample_bounds(sigma0, beta, rng).b
            offsets[i * n : (i + 1) * n] = b - base
        for target in survival_points:
            x = -math.log(target) / (2.0 * beta)
            observed = float(np.mean(offsets >= x))
            se = math.sqrt(target * (1.0 - target) / offsets.size)
            tol = 3.0 * se
            records.append(
                CriterionRecord(
                    criterion=f"bounds-law-beta{beta:g}-s{target:g}",
                    observed=observed,
                    expected=target,
                    tolerance=tol,
                    passed=abs(observed - target) <= tol,
                    detail={"x": x, "draws": int(offsets.size)},
                )
            )
    return records


# ---------------------------------------------------------------------------
# criterion 11: exact displacement-tail geometric decay


def verify_displacement_tail_decay(
    n: int = 8,
    betas: Sequence[float] = (1.0, 2.0),
    floor: float = 1e-9,
    factor: float = 10.0,
) -> list[CriterionRecord]:
    records = []
    for beta in betas:
        params = ModelParams(n, beta)
        bound = math.exp(-2.0 * beta) * factor
        worst = 0.0
        ok = True
        for j in range(1, n + 1):
            tails = oracle.exact_tail_distribution_D(params, j)
            for r in range(n):
                if tails[r] > floor:
                    ratio = tails[r + 1] / tails[r]
                    worst = max(worst, ratio)
                    if ratio > bound:
                        ok = False
        records.append(
            CriterionRecord(
                criterion=f"displacement-tail-decay-n{n}-beta{beta:g}",
                observed=worst,
                expected=f"successive tail ratios <= {factor} * exp(-2 beta)",
                tolerance=bound,
                passed=ok,
            )
        )
    return records
