"""Quick invariant suite runnable from the command line.

Each check exercises one module invariant at small scale and reports a
single pass/fail line. This is a smoke battery for installed copies; the
full statistical battery lives in the test suite.
"""

from __future__ import annotations

import sys

import numpy as np
from scipy import stats

from .core import (
    CycleStructure,
    PerfectMatching,
    class_size,
    cycle_structure,
    double_factorial_odd,
    enumerate_matchings,
    partition_of,
    stationary_partition_law,
    support,
    swap_distance,
    swap_distance_between,
)
from .coupling import (
    TilingPair,
    distance_preserving_step,
    phi_inverse,
    phi_map,
    schramm_step,
)
from .graphproc import CliqueGraph, giant_fraction, graph_step
from .sampling import (
    apply_sequence,
    expected_support,
    sample_k_rematch,
    sample_uniform_matching,
    swap_sequence_conditional,
)
from .walk import WalkState, exact_tv_full, exact_tv_lumped, step_round


def _check_counting(rng):
    from collections import Counter

    for n in range(1, 6):
        pool = list(enumerate_matchings(n))
        if len(pool) != double_factorial_odd(n):
            return False
        by_class = Counter(cycle_structure(pm) for pm in pool)
        if any(class_size(c) != cnt for c, cnt in by_class.items()):
            return False
    law = stationary_partition_law(4)
    return sum(law.values()) == 1


def _check_distances(rng):
    for _ in range(50):
        n = int(rng.integers(2, 7))
        a = sample_uniform_matching(n, rng)
        b = sample_uniform_matching(n, rng)
        d = swap_distance_between(a, b)
        if d != swap_distance_between(b, a):
            return False
        if (d == 0) != (a == b):
            return False
        if d > n - 1:
            return False
    return True


def _check_sampler_support(rng):
    n, k, reps = 60, 5, 4000
    vals = [support(cycle_structure(sample_k_rematch(n, k, rng))) for _ in range(reps)]
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1)) / reps**0.5
    return abs(mean - float(expected_support(k))) < 5 * se


def _check_sequence_realization(rng):
    for _ in range(40):
        c = CycleStructure((0, 1, 1))
        seq = swap_sequence_conditional(c, 7, rng)
        out = apply_sequence(PerfectMatching.identity(7), seq)
        got = cycle_structure(out)
        if tuple(got[1:]) != (1, 1):
            return False
    return True


def _check_tv_lumping(rng):
    full = exact_tv_full(4, 2, 15)
    lump = exact_tv_lumped(4, 2, 15)
    return all(abs(a.tv_full - b.tv_lumped) <= 1e-9 for a, b in zip(full, lump))


def _check_walk_round(rng):
    st = WalkState.start(5)
    for _ in range(20):
        st = step_round(st, 2, rng)
        objs = sorted(o for p in st.slots for o in p)
        if objs != list(range(1, 11)):
            return False
    return True


def _check_phi(rng):
    for n in (8, 17):
        for b_ in range(1, n + 1):
            for a in range(1, b_ + 1):
                vals = sorted(phi_map(a, b_, n, v) for v in range(2, n + 1))
                if vals != list(range(2, n + 1)):
                    return False
                if any(
                    phi_inverse(a, b_, n, phi_map(a, b_, n, v)) != v
                    for v in range(2, n + 1)
                ):
                    return False
    return True


def _check_schramm(rng):
    for _ in range(200):
        n = int(rng.integers(6, 30))
        pair = TilingPair.from_partitions(
            partition_of(sample_uniform_matching(n, rng)),
            partition_of(sample_uniform_matching(n, rng)),
        )
        for step in range(8):
            before = pair.unmatched_count
            pair = schramm_step(pair, refresh=(step % 3 == 0), rng=rng)
            if pair.unmatched_count > before:
                return False
            if sum(pair.unm_p) != sum(pair.unm_q):
                return False
    return True


def _check_distance_preserving(rng):
    for _ in range(30):
        n = int(rng.integers(3, 10))
        mu = sample_uniform_matching(n, rng)
        nu = sample_uniform_matching(n, rng)
        d0 = swap_distance_between(mu, nu)
        for _ in range(30):
            mu, nu = distance_preserving_step(mu, nu, rng)
        if swap_distance_between(mu, nu) != d0:
            return False
    return True


def _check_graph(rng):
    g = CliqueGraph(25)
    prev = giant_fraction(g)
    for _ in range(40):
        graph_step(g, CycleStructure((0, 1, 1)), rng)
        sizes = g.component_sizes()
        if sum(s * m for s, m in sizes.items()) != 25:
            return False
        if giant_fraction(g) < prev:
            return False
        prev = giant_fraction(g)
    return True


def _check_stationarity(rng):
    from collections import Counter

    draws = Counter()
    reps = 3000
    for _ in range(reps):
        st = WalkState.start(3)
        for _ in range(10):
            st = step_round(st, 2, rng)
        draws[st.matching] += 1
    observed = [draws.get(m, 0) for m in enumerate_matchings(3)]
    return stats.chisquare(observed).pvalue > 1e-4


CHECKS = [
    ("counting identities", _check_counting),
    ("swap-distance metric", _check_distances),
    ("rematch support mean", _check_sampler_support),
    ("conditional sequences realize their structure", _check_sequence_realization),
    ("lumped kernel equals full kernel", _check_tv_lumping),
    ("round step preserves the object set", _check_walk_round),
    ("grid map bijective with inverse", _check_phi),
    ("coupled tiling step invariants", _check_schramm),
    ("distance-preserving coupling", _check_distance_preserving),
    ("clique graph invariants", _check_graph),
    ("small-instance stationarity", _check_stationarity),
]


def run_all(seed: int = 0, out=None) -> bool:
    if out is None:
        out = sys.stdout
    all_ok = True
    for idx, (label, fn) in enumerate(CHECKS):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
        ok = fn(rng)
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {label}", file=out)
    return bool(all_ok)
