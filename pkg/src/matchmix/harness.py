"""Experiment orchestration: configuration, seeding, dispatch, output.

Every run is reproducible from (config, master seed). Replica streams are
derived with spawn keys so replicas never share state. Output is CSV or
JSON lines with an identical column set; the schema version rides along as
the first column.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core import (
    InfeasibleError,
    PerfectMatching,
    cycle_structure,
    partition_of,
    support,
    swap_distance,
)
from .coupling import CouplingStageConfig, estimate_contraction, three_stage_coupling
from .graphproc import theta_hat
from .sampling import expected_support, sample_k_rematch
from .walk import exact_tv_full, exact_tv_lumped, mixing_profile

SCHEMA_VERSION = 1

KINDS = ("sample", "walk", "tv-exact", "couple", "contraction", "giant", "verify")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_VERIFY_FAIL = 3


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    n: int = 100
    k: int = 2
    times: Sequence[int] = ()
    beta: Sequence[float] = (4.0,)
    delta: float = 0.2
    reps: int = 100
    seed: int = 0
    out: Optional[str] = None
    fmt: str = "csv"
    plot: bool = True

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.n < 1 or self.k < 2 or self.k > self.n:
            raise ValueError("need n >= 1 and 2 <= k <= n")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        if self.fmt not in ("csv", "jsonl"):
            raise ValueError("format must be csv or jsonl")
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")
        if any(b <= 0 for b in self.beta):
            raise ValueError("beta values must be positive")
        if any(t < 0 for t in self.times):
            raise ValueError("times must be nonnegative")


def config_from_dict(data: dict, kind: Optional[str] = None) -> ExperimentConfig:
    """Build a config from a JSON-style dict; unknown keys are rejected."""
    bad = set(data) - set(ExperimentConfig.__dataclass_fields__)
    if bad:
        raise ValueError(f"unknown config keys: {sorted(bad)}")
    merged = dict(data)
    if kind is not None:
        merged["kind"] = kind
    if "kind" not in merged:
        raise ValueError("experiment kind is required")
    for key in ("times", "beta"):
        if key in merged:
            merged[key] = tuple(merged[key])
    return ExperimentConfig(**merged)


def derive_stream(master_seed: int, replica: int) -> np.random.Generator:
    """Deterministic, collision-free replica stream from a master seed."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(replica,))
    )


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("MATCHMIX_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(fn, items):
    workers = _thread_count()
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -------------------------------------------------------------------- writers


def write_records(records: List[dict], columns: Sequence[str], fh, fmt: str) -> None:
    cols = ["schema_version", *columns]
    if fmt == "csv":
        writer = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        writer.writeheader()
        for rec in records:
            writer.writerow({**rec, "schema_version": SCHEMA_VERSION})
    else:
        for rec in records:
            row = {"schema_version": SCHEMA_VERSION}
            row.update((c, rec.get(c)) for c in columns)
            fh.write(json.dumps(row) + "\n")


def emit(records: List[dict], columns: Sequence[str], cfg: ExperimentConfig) -> None:
    if cfg.out is None:
        write_records(records, columns, sys.stdout, cfg.fmt)
    else:
        with open(cfg.out, "w", newline="") as fh:
            write_records(records, columns, fh, cfg.fmt)


# -------------------------------------------------------------- experiments


def _run_sample(cfg: ExperimentConfig):
    rng = derive_stream(cfg.seed, 0)
    records = []
    for rep in range(cfg.reps):
        pm = sample_k_rematch(cfg.n, cfg.k, rng)
        c = cycle_structure(pm)
        records.append(
            {
                "rep": rep,
                "support": support(c),
                "swap_distance": swap_distance(c),
                "partition": "+".join(map(str, partition_of(pm))),
            }
        )
    cols = ("rep", "support", "swap_distance", "partition")
    mean = float(np.mean([r["support"] for r in records]))
    se = float(np.std([r["support"] for r in records], ddof=1)) / math.sqrt(cfg.reps)
    kappa = float(expected_support(cfg.k))
    summary = (
        f"sample: n={cfg.n} k={cfg.k} reps={cfg.reps} "
        f"mean support={mean:.4f} se={se:.4f} expected={kappa:.4f}"
    )
    return records, cols, summary


def _run_walk(cfg: ExperimentConfig):
    times = list(cfg.times) or [0, cfg.n, 2 * cfg.n]
    rng = derive_stream(cfg.seed, 0)
    records = mixing_profile(cfg.n, cfg.k, times, cfg.reps, rng)
    cols = ("time", "replica", "fixed_points", "support_used")
    by_time = {}
    for r in records:
        by_time.setdefault(r["time"], []).append(r["fixed_points"])
    parts = [
        f"t={t}: mean fixed points={np.mean(v):.3f} "
        f"se={np.std(v, ddof=1) / math.sqrt(len(v)):.3f}"
        for t, v in sorted(by_time.items())
    ]
    return records, cols, "walk: " + "; ".join(parts)


def _run_tv(cfg: ExperimentConfig):
    t_max = max(cfg.times) if cfg.times else 50
    lumped = exact_tv_lumped(cfg.n, cfg.k, t_max)
    try:
        full = exact_tv_full(cfg.n, cfg.k, t_max)
        full_vals = [r.tv_full for r in full]
    except InfeasibleError:
        full_vals = [None] * (t_max + 1)
    records = [
        {"t": t, "tv_full": full_vals[t], "tv_lumped": lumped[t].tv_lumped}
        for t in range(t_max + 1)
    ]
    gap = max(
        abs(r["tv_full"] - r["tv_lumped"]) for r in records if r["tv_full"] is not None
    ) if any(v is not None for v in full_vals) else None
    summary = f"tv-exact: n={cfg.n} k={cfg.k} t=0..{t_max}"
    if gap is not None:
        summary += f" max |full-lumped|={gap:.2e}"
    return records, ("t", "tv_full", "tv_lumped"), summary


def _run_couple(cfg: ExperimentConfig):
    beta = cfg.beta[0]
    stage_cfg = CouplingStageConfig(beta=beta, delta=cfg.delta, n=cfg.n, k=cfg.k)
    mu0 = PerfectMatching.identity(cfg.n)
    pairs = [(1, 4), (2, 3)] + [(2 * i - 1, 2 * i) for i in range(3, cfg.n + 1)]
    nu0 = PerfectMatching.from_pairs(pairs)

    def one(rep):
        out = three_stage_coupling(mu0, nu0, stage_cfg, cfg.k, derive_stream(cfg.seed, rep))
        return {
            "beta": beta,
            "rep": rep,
            "final_distance": out.final_distance,
            "coalesced": int(out.coalesced),
            "a_delta": int(out.a_delta),
            "rounds": out.rounds,
        }

    records = _parallel_map(one, range(cfg.reps))
    dists = [r["final_distance"] for r in records]
    mean = float(np.mean(dists))
    se = float(np.std(dists, ddof=1)) / math.sqrt(cfg.reps)
    summary = (
        f"couple: n={cfg.n} k={cfg.k} beta={beta} delta={cfg.delta} "
        f"lambda_hat={mean:.4f} se={se:.4f} "
        f"coalesce rate={np.mean([r['coalesced'] for r in records]):.3f}"
    )
    cols = ("beta", "rep", "final_distance", "coalesced", "a_delta", "rounds")
    return records, cols, summary


def _run_contraction(cfg: ExperimentConfig):
    records = []
    parts = []
    for i, beta in enumerate(cfg.beta):
        res = estimate_contraction(
            cfg.n, cfg.k, beta, cfg.delta, cfg.reps, derive_stream(cfg.seed, i)
        )
        records.append(
            {
                "beta": beta,
                "delta": cfg.delta,
                "n": cfg.n,
                "k": cfg.k,
                "reps": cfg.reps,
                "mean_distance": res["mean"],
                "se": res["se"],
                "coalesce_rate": res["coalesce_rate"],
                "a_delta_rate": res["a_delta_rate"],
            }
        )
        parts.append(f"beta={beta}: lambda_hat={res['mean']:.4f} se={res['se']:.4f}")
    cols = (
        "beta",
        "delta",
        "n",
        "k",
        "reps",
        "mean_distance",
        "se",
        "coalesce_rate",
        "a_delta_rate",
    )
    return records, cols, "contraction: " + "; ".join(parts)


def _run_giant(cfg: ExperimentConfig):
    kappa = float(expected_support(cfg.k))
    records = []
    parts = []
    for i, beta in enumerate(cfg.beta):
        est = theta_hat(cfg.n, cfg.k, beta, cfg.reps, derive_stream(cfg.seed, i))
        rounds = int(beta * cfg.n / kappa)
        for rep, frac in enumerate(est.samples):
            records.append(
                {
                    "beta": beta,
                    "rep": rep,
                    "giant_fraction": frac,
                    "rounds": rounds,
                    "seed": cfg.seed,
                }
            )
        parts.append(f"beta={beta}: theta_hat={est.mean:.4f} std={est.std:.4f}")
    cols = ("beta", "rep", "giant_fraction", "rounds", "seed")
    return records, cols, "giant: " + "; ".join(parts)


# ------------------------------------------------------------------- verify


def run_verify(seed: int = 0, out=None) -> bool:
    """Fast invariant suite touching every module; True iff all checks pass."""
    from . import verify as _verify

    return _verify.run_all(seed=seed, out=out)


def run_experiment(cfg: ExperimentConfig) -> int:
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.kind == "verify":
        ok = run_verify(seed=cfg.seed)
        return EXIT_OK if ok else EXIT_VERIFY_FAIL
    runners = {
        "sample": _run_sample,
        "walk": _run_walk,
        "tv-exact": _run_tv,
        "couple": _run_couple,
        "contraction": _run_contraction,
        "giant": _run_giant,
    }
    try:
        records, cols, summary = runners[cfg.kind](cfg)
    except InfeasibleError as exc:
        print(f"infeasible at desk scale: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    emit(records, cols, cfg)
    print(summary)
    if cfg.plot and cfg.out is not None:
        from .figures import render_figure

        fig_path = render_figure(cfg.kind, records, cfg.out)
        if fig_path is not None:
            print(f"figure written to {fig_path}")
    return EXIT_OK
