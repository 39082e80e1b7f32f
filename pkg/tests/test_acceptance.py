"""Acceptance battery: ten criteria, one pass/fail line each.

Each test prints a single criterion line before asserting, so the verdicts
are visible in the captured output even when a criterion fails.
"""

import math

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from matchmix.core import (
    PerfectMatching,
    cycle_structure,
    enumerate_matchings,
    stationary_partition_law,
    support,
    swap_distance,
    swap_distance_between,
)
from matchmix.coupling import (
    TilingPair,
    distance_preserving_step,
    estimate_contraction,
    phi_profile,
    schramm_step,
)
from matchmix.graphproc import theta_hat, transposition_giant
from matchmix.sampling import (
    expected_support,
    sample_k_rematch,
    sample_structure,
    sample_uniform_cycle_via_swaps,
    sample_uniform_matching,
    swap_sequence_relaxed,
)
from matchmix.walk import (
    WalkState,
    exact_tv_full,
    exact_tv_lumped,
    fixed_point_count,
    partition_ensemble_k2,
    step_round,
)
from matchmix.core import partition_of


def rng_for(label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(20260830, spawn_key=(label,)))


def verdict(num, ok, detail):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def test_criterion_1_cycle_sampler_exactness():
    rng = rng_for(1)
    total_draws = 1_000_000
    worst = 1.0
    for ell in (2, 3, 4, 5, 6):
        members = [
            pm
            for pm in enumerate_matchings(ell)
            if cycle_structure(pm) == (0,) * (ell - 1) + (1,)
        ]
        index = {pm: i for i, pm in enumerate(members)}
        counts = np.zeros(len(members), dtype=np.int64)
        for _ in range(total_draws):
            counts[index[sample_uniform_cycle_via_swaps(ell, rng)]] += 1
        p = stats.chisquare(counts).pvalue
        worst = min(worst, p)
    ok = worst > 1e-3
    assert verdict(1, ok, f"min chi-square p across l=2..6 is {worst:.4g}")


def test_criterion_2_kappa_formula():
    rng = rng_for(2)
    reps = 100_000
    worst_z = 0.0
    for k in (2, 3, 10, 100):
        n = 2 * k
        vals = np.empty(reps)
        for i in range(reps):
            vals[i] = support(cycle_structure(sample_k_rematch(n, k, rng)))
        kappa = float(expected_support(k))
        se = vals.std(ddof=1) / math.sqrt(reps)
        worst_z = max(worst_z, abs(vals.mean() - kappa) / se)
    ok = worst_z <= 3
    assert verdict(2, ok, f"max |z| over k grid is {worst_z:.2f}")


def test_criterion_3_tv_preservation():
    worst = 0.0
    for n, k in ((3, 2), (4, 2), (5, 2), (4, 3)):
        full = exact_tv_full(n, k, 50)
        lump = exact_tv_lumped(n, k, 50)
        worst = max(
            worst, max(abs(a.tv_full - b.tv_lumped) for a, b in zip(full, lump))
        )
    ok = worst <= 1e-9
    assert verdict(3, ok, f"max |full - lumped| over the grid is {worst:.2e}")


def test_criterion_4_phi_and_tiling_bounds():
    for n in range(2, 201):
        for b_ in range(1, n + 1):
            for a in range(1, b_ + 1):
                prof = np.sort(phi_profile(a, b_, n))
                assert np.array_equal(prof, np.arange(2, n + 1))
    rng = rng_for(4)
    width_violations = 0
    count_violations = 0
    steps_done = 0
    while steps_done < 10_000:
        n = int(rng.integers(6, 60))
        pair = TilingPair.from_partitions(
            partition_of(sample_uniform_matching(n, rng)),
            partition_of(sample_uniform_matching(n, rng)),
        )
        for s in range(20):
            if steps_done >= 10_000:
                break
            before_count = pair.unmatched_count
            before_u = pair.smallest_unmatched()
            pair = schramm_step(pair, refresh=(s % 4 == 0), rng=rng)
            steps_done += 1
            if pair.unmatched_count > before_count:
                count_violations += 1
            after_u = pair.smallest_unmatched()
            if before_u is not None and after_u is not None and after_u < before_u // 2:
                width_violations += 1
    ok = width_violations == 0 and count_violations == 0
    assert verdict(
        4,
        ok,
        f"bijectivity exhaustive to n=200; {width_violations} width and "
        f"{count_violations} count violations in 10^4 steps",
    )


def test_criterion_5_distance_preservation():
    rng = rng_for(5)
    violations = 0
    for _ in range(100):
        n = int(rng.integers(3, 15))
        mu = sample_uniform_matching(n, rng)
        nu = sample_uniform_matching(n, rng)
        d0 = swap_distance_between(mu, nu)
        for _ in range(1000):
            mu, nu = distance_preserving_step(mu, nu, rng)
            if swap_distance_between(mu, nu) != d0:
                violations += 1
                break
    ok = violations == 0
    assert verdict(5, ok, f"{violations} drift events over 100 pairs x 10^3 steps")


def test_criterion_6_relaxed_uniformity_bound():
    rng = rng_for(6)
    trials = 100_000
    ok = True
    details = []
    for n, k, delta_steps in ((100, 10, 1), (1000, 10, 5)):
        hits = 0
        for _ in range(trials):
            c = sample_structure(k, rng)
            if swap_distance(c) == 0:
                continue
            seq = swap_sequence_relaxed(c, n, rng)
            if any(seq.violations[:delta_steps]):
                hits += 1
        phat = hits / trials
        bound = 2 * delta_steps * k / n
        se = math.sqrt(max(phat * (1 - phat), 1 / trials) / trials)
        ok &= phat <= bound + 3 * se
        details.append(f"(n={n},D={delta_steps}): {phat:.4f} vs {bound:.4f}")
    assert verdict(6, ok, "; ".join(details))


def er_theta(gamma: float) -> float:
    return brentq(lambda t: t - (1 - math.exp(-2 * gamma * t)), 1e-9, 1 - 1e-12)


def test_criterion_7_er_cross_check():
    rng = rng_for(7)
    worst = 0.0
    for gamma in (0.75, 1.0, 1.5):
        est = transposition_giant(100_000, gamma, 50, rng)
        worst = max(worst, abs(est.mean - er_theta(gamma)))
    ok = worst <= 0.02
    assert verdict(7, ok, f"max |mean - theta(gamma)| is {worst:.4f}")


def test_criterion_8_giant_component_behavior():
    rng = rng_for(8)
    n = 100_000
    ests = {b: theta_hat(n, 2, float(b), 30, rng) for b in (1, 2, 3, 4, 5, 6)}
    monotone = True
    for lo, hi in ((1, 2), (2, 3), (3, 4)):
        a, b = ests[lo], ests[hi]
        slack = 3 * (a.std + b.std) / math.sqrt(30)
        monotone &= b.mean >= a.mean - slack
    worst_rel = 0.0
    for b in (3, 4, 5, 6):
        target = math.exp(-b)
        got = 1 - ests[b].mean ** 2
        worst_rel = max(worst_rel, abs(got - target) / target)
    ok = monotone and worst_rel <= 0.25
    assert verdict(
        8,
        ok,
        f"monotone={monotone}; worst relative error of 1-theta^2 vs e^-beta "
        f"is {worst_rel:.2f} (tolerance 0.25)",
    )


def test_criterion_9a_fixed_points_before_cutoff():
    rng = rng_for(9)
    n, reps = 500, 200
    ok = True
    details = []
    for k in (2, 10):
        kappa = float(expected_support(k))
        t_half = int(round(0.5 * n * math.log(n) / kappa))
        hits = 0
        for _ in range(reps):
            st = WalkState.start(n)
            for _ in range(t_half):
                st = step_round(st, k, rng)
            hits += fixed_point_count(st) > 10
        frac = hits / reps
        ok &= frac >= 0.95
        details.append(f"k={k}: {frac:.3f} of reps above 10 at t={t_half}")
    assert verdict("9a", ok, "; ".join(details))


def test_criterion_9b_three_stage_coalescence():
    rng = rng_for(10)
    ok = True
    details = []
    for k in (2, 10):
        res = estimate_contraction(500, k, 4.0, 0.2, 200, rng)
        ok &= res["coalesce_rate"] >= 0.9
        details.append(
            f"k={k}: coalesce rate {res['coalesce_rate']:.3f} "
            f"(gate rate {res['a_delta_rate']:.3f})"
        )
    assert verdict("9b", ok, "; ".join(details))


def test_criterion_10_stationarity():
    rng = rng_for(11)
    counts = partition_ensemble_k2(5, 1000, 100_000, rng)
    law = stationary_partition_law(5)
    parts = sorted(law)
    observed = [counts.get(p, 0) for p in parts]
    expected = [float(law[p]) * 100_000 for p in parts]
    p = stats.chisquare(observed, expected).pvalue
    ok = p > 1e-3
    assert verdict(10, ok, f"chi-square p = {p:.4g} over {len(parts)} partitions")
