"""Sampling and statistics laboratory for the Mallows permutation model
with the L1 (Spearman footrule) distance, beta > 0.

The model puts mass proportional to exp(-beta * H(sigma, id)) on S_n,
where H is the sum of |sigma(j) - j|.  The package provides an exact
small-n enumeration oracle, a hit-and-run Markov chain sampler with
arc-evolution instrumentation, and estimators/reference laws for the
cycle-structure scaling experiments.
"""

from .permutation import (
    ModelParams,
    Permutation,
    cycle_containing,
    cycle_decomposition,
    displacement_count,
    l1_distance,
    quadrant_count,
    reverse_conjugate,
)
from .oracle import (
    ExactModel,
    OracleLimitError,
    exact_expectation,
    exact_probability,
    exact_tail_distribution_D,
    partition_function,
    total_variation_distance,
)
from .sampler import (
    Bounds,
    ChainConfig,
    ChainSample,
    InvariantViolation,
    PlacementTrace,
    chain_rng,
    counts_from_bounds,
    default_burnin,
    hit_and_run_step,
    place_symbols,
    run_chain,
    sample_bounds,
)
from .arcs import ArcTracker, TrackWalk, available_heads, replay, replay_steps, track_walk
from .stats import (
    CycleSummary,
    EstimateWithError,
    estimate_cycle_diameter,
    estimate_cycle_length,
    gem_stick_breaking,
    ks_statistic,
    ks_two_sample,
    least_squares_slope,
    loglog_slope,
    normalized_sorted_lengths,
    summarize,
    uniform_permutation_reference,
)

__version__ = "0.1.0"
