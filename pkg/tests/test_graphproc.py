"""Oracles for the clique-graph process and giant-fraction estimation."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.optimize import brentq

from matchmix.core import CycleStructure, InfeasibleError
from matchmix.graphproc import (
    CliqueGraph,
    GiantEstimate,
    giant_fraction,
    graph_step,
    quenched_graph_run,
    theta_hat,
    transposition_giant,
)


def rng_for(label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(20260829, spawn_key=(label,)))


def er_theta(gamma: float) -> float:
    # classical fixed point theta = 1 - exp(-2*gamma*theta)
    return brentq(lambda t: t - (1 - math.exp(-2 * gamma * t)), 1e-9, 1 - 1e-12)


def test_identity_structure_adds_nothing():
    rng = rng_for(1)
    g = CliqueGraph(6)
    graph_step(g, CycleStructure((6,)), rng)
    assert giant_fraction(g) == pytest.approx(1 / 6)
    assert g.rounds_applied == 1


def test_full_cycle_one_component():
    rng = rng_for(2)
    g = CliqueGraph(7)
    graph_step(g, CycleStructure((0, 0, 0, 0, 0, 0, 1)), rng)
    assert giant_fraction(g) == 1
    assert g.component_sizes() == {7: 1}


def test_two_disjoint_two_cliques():
    rng = rng_for(3)
    for _ in range(50):
        g = CliqueGraph(4)
        graph_step(g, CycleStructure((0, 2)), rng)
        assert giant_fraction(g) == pytest.approx(1 / 2)
        assert g.component_sizes() == {2: 2}


def test_sizes_sum_and_monotone_giant():
    rng = rng_for(4)
    g = CliqueGraph(30)
    prev = giant_fraction(g)
    for _ in range(60):
        graph_step(g, CycleStructure((0, 1, 1)), rng)
        sizes = g.component_sizes()
        assert sum(s * m for s, m in sizes.items()) == 30
        assert giant_fraction(g) >= prev
        prev = giant_fraction(g)


def test_support_exceeds_n():
    rng = rng_for(5)
    with pytest.raises(InfeasibleError):
        graph_step(CliqueGraph(3), CycleStructure((0, 2)), rng)


def test_giant_estimate_validation():
    est = GiantEstimate(beta=1.0, samples=(0.5, 0.7))
    assert est.mean == pytest.approx(0.6)
    with pytest.raises(ValueError):
        GiantEstimate(beta=1.0, samples=(0.0, 0.5))


def test_theta_hat_monotone_in_beta():
    rng = rng_for(6)
    n = 2000
    means = [theta_hat(n, 2, b, 20, rng).mean for b in (1.0, 2.0, 3.0, 4.0)]
    assert all(means[i + 1] > means[i] - 0.03 for i in range(3))
    assert means[-1] > 0.9


def test_theta_hat_subcritical():
    rng = rng_for(7)
    est = theta_hat(4000, 2, 0.2, 20, rng)
    assert est.mean < 10 * math.log(4000) / 4000


def test_theta_hat_fast_path_matches_generic():
    # the k=2 shortcut and the per-round union-find loop agree in law
    rng = rng_for(8)
    n, beta, reps = 300, 2.0, 200
    fast = theta_hat(n, 2, beta, reps, rng).samples
    kappa = 4 / 3
    rounds = int(beta * n / kappa)
    generic = []
    for sub in rng.spawn(reps):
        g = CliqueGraph(n)
        for _ in range(rounds):
            if sub.integers(0, 3) == 0:
                graph_step(g, CycleStructure((2,)), sub)
            else:
                graph_step(g, CycleStructure((0, 1)), sub)
        generic.append(giant_fraction(g))
    assert stats.ks_2samp(fast, generic).pvalue > 1e-3


def test_theta_hat_rejects_nonpositive_beta():
    with pytest.raises(ValueError):
        theta_hat(100, 2, 0.0, 5, rng_for(9))


def test_quenched_trivial():
    rng = rng_for(10)
    traj = quenched_graph_run(5, [CycleStructure((5,))] * 4, rng)
    assert traj == [1 / 5] * 4
    traj = quenched_graph_run(5, [CycleStructure((0, 0, 0, 0, 1))], rng)
    assert traj == [1.0]


def test_quenched_alternating_vs_iid_mixture():
    # alternating 2-cycle / 3-cycle schedule vs the iid fair mixture with
    # the same cumulative support, compared at the endpoint
    rng = rng_for(11)
    n, rounds, reps = 1500, 1200, 120
    two = CycleStructure((0, 1))
    three = CycleStructure((0, 0, 1))
    sched = [two if t % 2 == 0 else three for t in range(rounds)]
    quenched = [quenched_graph_run(n, sched, sub)[-1] for sub in rng.spawn(reps)]
    annealed = []
    for sub in rng.spawn(reps):
        mix = [two if x else three for x in sub.integers(0, 2, size=rounds)]
        annealed.append(quenched_graph_run(n, mix, sub)[-1])
    assert stats.ks_2samp(quenched, annealed).pvalue > 1e-3


def test_transposition_giant_matches_fixed_point():
    rng = rng_for(12)
    for gamma in (0.75, 1.0, 1.5):
        est = transposition_giant(20_000, gamma, 10, rng)
        assert abs(est.mean - er_theta(gamma)) < 0.02
