"""Command-line front end: oracle runs, sampling jobs, invariant sweeps,
and the scaling-law verification experiments.

Subcommands: oracle, sample, arcs, invariants, verify-thm11,
verify-thm131, verify-thm12.  Experiment subcommands emit a JSON report
with one record per checked criterion and exit nonzero iff any record
fails; `sample` and `arcs` emit data (permutation lines, stats CSV, or
an arc event stream).  All randomness flows from --seed; without the
flag a fresh seed is drawn and printed to stderr.  The environment
variable MALLOWS_THREADS caps the chain worker pool.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels, arcs as arcs_mod, experiments
from .oracle import OracleLimitError
from .permutation import ModelParams, Permutation
from .sampler import ChainConfig, chain_rng, iter_chain_blocks, place_symbols, sample_bounds
from .experiments import CriterionRecord, resolve_workers

SCHEMA = "mallows-l1/report-v1"

__all__ = ["ExperimentSpec", "parse_args", "run", "main"]


@dataclass
class ExperimentSpec:
    kind: str
    options: dict


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(
            f"beta must be strictly positive (the model needs beta > 0), got {text}"
        )
    return value


def _positive_grid(text: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("grid must contain at least one value")
    return [_positive_float(p) for p in parts]


def _int_grid(text: str) -> list[int]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("grid must contain at least one value")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer grid: {text!r}")


def parse_args(argv=None) -> ExperimentSpec:
    parser = argparse.ArgumentParser(
        prog="mallows-l1",
        description="Sampling and statistics laboratory for the L1 permutation model.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)

    def common(p, seed=True, out=True):
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="master seed; derived from entropy (and printed) if absent")
        if out:
            p.add_argument("--out", default=None, help="output file (default stdout)")

    p = sub.add_parser("oracle", help="exact enumeration report for small n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=_positive_float, required=True)
    p.add_argument("--s", type=int, default=None, help="designated point (default mid)")
    p.add_argument("--j", type=int, action="append", default=None,
                   help="tail level, repeatable (default 1, mid, n)")
    common(p, seed=False)

    p = sub.add_parser("sample", help="run chains and emit permutations or stats")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=_positive_float, required=True)
    p.add_argument("--burnin", type=int, default=None)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--emit", choices=("perms", "stats"), default="perms")
    p.add_argument("--s", type=int, default=None,
                   help="point for per-sample cycle stats (default mid)")
    common(p)

    p = sub.add_parser("arcs", help="one instrumented placement pass")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=_positive_float, required=True)
    p.add_argument("--sigma0", default="id",
                   help='start permutation: "id" or a one-line image list like "2 3 1"')
    p.add_argument("--trace", action="store_true", help="include the merge/close event stream")
    common(p)

    p = sub.add_parser("invariants", help="arc/bounds pathwise invariant sweep")
    p.add_argument("--n", type=_int_grid, default=[20, 200],
                   help="comma-separated sizes (default 20,200)")
    p.add_argument("--replays", type=int, default=1000)
    common(p)

    p = sub.add_parser("verify-thm11", help="cycle length scaling checks")
    p.add_argument("--mode", choices=("slope", "saturation", "both"), default="both")
    p.add_argument("--n", type=int, default=50_000, help="size for the slope check")
    p.add_argument("--beta-grid", type=_positive_grid, default=[0.02, 0.04, 0.08])
    p.add_argument("--samples", type=int, default=400, help="samples per slope point")
    p.add_argument("--burnin", type=int, default=1500)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--n-grid", type=_int_grid, default=[200, 400, 800],
                   help="sizes for the saturation check")
    p.add_argument("--sat-beta", type=_positive_float, default=0.001)
    p.add_argument("--sat-samples", type=int, default=2000)
    p.add_argument("--chains", type=int, default=4)
    common(p)

    p = sub.add_parser("verify-thm131", help="cycle diameter decay check")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--beta-grid", type=_positive_grid, default=[1.5, 2.0, 2.5, 3.0])
    p.add_argument("--samples", type=int, default=1_000_000, help="samples per point")
    p.add_argument("--burnin", type=int, default=None)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--chains", type=int, default=4)
    common(p)

    p = sub.add_parser("verify-thm12", help="small-beta limit law checks")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--burnin", type=int, default=1000)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--chains", type=int, default=4)
    common(p)

    ns = parser.parse_args(argv)
    options = vars(ns).copy()
    kind = options.pop("kind")
    return ExperimentSpec(kind=kind, options=options)


def _resolve_seed(options: dict) -> int:
    seed = options.get("seed")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
        print(f"mallows-l1: derived seed {seed}", file=sys.stderr)
    return seed


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if dataclasses.is_dataclass(x):
        return dataclasses.asdict(x)
    raise TypeError(f"not JSON serializable: {type(x)}")


def _report(kind: str, spec_echo: dict, criteria: list[CriterionRecord] | None,
            payload: dict | None = None, seed: int | None = None,
            elapsed: float | None = None) -> dict:
    report: dict = {"schema": SCHEMA, "kind": kind, "spec": spec_echo}
    if seed is not None:
        report["seed"] = seed
    if payload:
        report.update(payload)
    if criteria is not None:
        report["criteria"] = [dataclasses.asdict(c) for c in criteria]
        report["pass"] = all(c.passed for c in criteria)
    report["timing"] = {"elapsed_seconds": elapsed if elapsed is not None else 0.0}
    return report


def _emit_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_sample(options: dict) -> dict:
    seed = _resolve_seed(options)
    params = ModelParams(options["n"], options["beta"])
    config = ChainConfig(
        params=params,
        samples=options["samples"],
        master_seed=seed,
        burnin=options["burnin"],
        thin=options["thin"],
        chains=options["chains"],
    )
    s = options.get("s") or (params.n + 1) // 2
    lines: list[str] = []
    if options["emit"] == "stats":
        lines.append("chain,step,cycle_len_s,diameter_s,l1,largest_cycle")
    for chain_id, count in enumerate(config.samples_per_chain()):
        if count == 0:
            continue
        for steps, states in iter_chain_blocks(
            params, chain_id, seed, config.effective_burnin, config.thin, count
        ):
            if options["emit"] == "perms":
                lines.extend(" ".join(str(v) for v in row) for row in states)
            else:
                len_s, diam_s, l1, largest, _ = _kernels.batch_cycle_stats(states, s)
                lines.extend(
                    f"{chain_id},{step},{a},{b},{c},{d}"
                    for step, a, b, c, d in zip(steps, len_s, diam_s, l1, largest)
                )
    _emit_text("\n".join(lines) + "\n", options.get("out"))
    return _report(
        "sample",
        {k: options[k] for k in ("n", "beta", "thin", "samples", "chains", "emit")},
        criteria=None,
        seed=seed,
    )


def _run_arcs(options: dict) -> dict:
    seed = _resolve_seed(options)
    n = options["n"]
    beta = options["beta"]
    sigma0 = Permutation.identity(n) if options["sigma0"] == "id" else Permutation.from_text(
        options["sigma0"]
    )
    if sigma0.n != n:
        raise ValueError(f"--sigma0 has length {sigma0.n}, --n is {n}")
    rng = chain_rng(seed, 0)
    bounds = sample_bounds(sigma0, beta, rng)
    trace = place_symbols(bounds.b, rng)
    tracker = arcs_mod.replay(bounds.b, trace.y, log_events=True)
    payload = {
        "n": n,
        "beta": beta,
        "sigma0": sigma0.to_text(),
        "result": trace.result.to_text(),
        "cycles": [list(c) for c in tracker.closed_cycles()],
    }
    if options["trace"]:
        payload["events"] = tracker.events
    return _report("arcs", {"n": n, "beta": beta}, criteria=None, payload=payload, seed=seed)


def run(spec: ExperimentSpec) -> dict:
    """Execute a parsed experiment and return its report dict."""
    options = spec.options
    start = time.monotonic()
    if spec.kind == "oracle":
        params = ModelParams(options["n"], options["beta"])
        payload = experiments.oracle_report(params, s=options.get("s"), tail_js=options.get("j"))
        report = _report("oracle", {"n": params.n, "beta": params.beta}, None, payload)
    elif spec.kind == "sample":
        report = _run_sample(options)
    elif spec.kind == "arcs":
        report = _run_arcs(options)
    elif spec.kind == "invariants":
        seed = _resolve_seed(options)
        criteria = experiments.verify_arc_invariants(
            ns=options["n"], replays=options["replays"], seed=seed
        )
        criteria += experiments.verify_bounds_law(seed=seed)
        criteria += experiments.verify_displacement_tail_decay()
        report = _report(
            "invariants", {"n": options["n"], "replays": options["replays"]}, criteria, seed=seed
        )
    elif spec.kind == "verify-thm11":
        seed = _resolve_seed(options)
        workers = resolve_workers(options["chains"])
        criteria = []
        if options["mode"] in ("slope", "both"):
            criteria += experiments.verify_cycle_length_slope(
                n=options["n"],
                betas=options["beta_grid"],
                samples_per_point=options["samples"],
                chains=options["chains"],
                burnin=options["burnin"],
                thin=options["thin"],
                seed=seed,
                workers=workers,
            )
        if options["mode"] in ("saturation", "both"):
            criteria += experiments.verify_cycle_length_saturation(
                ns=options["n_grid"],
                beta=options["sat_beta"],
                samples=options["sat_samples"],
                chains=options["chains"],
                seed=seed,
                workers=workers,
            )
        report = _report("verify-thm11", {"mode": options["mode"]}, criteria, seed=seed)
    elif spec.kind == "verify-thm131":
        seed = _resolve_seed(options)
        criteria = experiments.verify_diameter_decay(
            n=options["n"],
            betas=options["beta_grid"],
            samples_per_point=options["samples"],
            chains=options["chains"],
            burnin=options["burnin"],
            thin=options["thin"],
            seed=seed,
            workers=resolve_workers(options["chains"]),
        )
        report = _report("verify-thm131", {"n": options["n"]}, criteria, seed=seed)
    elif spec.kind == "verify-thm12":
        seed = _resolve_seed(options)
        criteria = experiments.verify_poisson_dirichlet(
            n=options["n"],
            samples=options["samples"],
            chains=options["chains"],
            burnin=options["burnin"],
            thin=options["thin"],
            seed=seed,
            workers=resolve_workers(options["chains"]),
        )
        report = _report("verify-thm12", {"n": options["n"]}, criteria, seed=seed)
    else:
        raise ValueError(f"unknown experiment kind {spec.kind!r}")
    report["timing"]["elapsed_seconds"] = time.monotonic() - start
    return report


def main(argv=None) -> int:
    spec = parse_args(argv)
    try:
        report = run(spec)
    except OracleLimitError as exc:
        print(f"mallows-l1: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"mallows-l1: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2, default=_jsonable) + "\n"
    if spec.kind == "sample":
        # sample's stdout/--out carries the data; report goes to stderr
        print(text, file=sys.stderr, end="")
    else:
        _emit_text(text, spec.options.get("out"))
    return 0 if report.get("pass", True) else 1


if __name__ == "__main__":
    sys.exit(main())
