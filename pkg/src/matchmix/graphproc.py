"""Auxiliary clique-graph process over pair labels.

Each round contributes one clique per nontrivial cycle of a sampled cycle
structure: the labels touched by an l-cycle become mutually connected.
Component sizes only ever merge, so a union-find forest with an
incrementally maintained maximum is enough to follow the giant fraction.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import CycleStructure, InfeasibleError, cycle_structure, support
from .sampling import _sample_subset, expected_support, sample_uniform_matching

__all__ = [
    "CliqueGraph",
    "GiantEstimate",
    "graph_step",
    "giant_fraction",
    "theta_hat",
    "quenched_graph_run",
    "transposition_giant",
]


class CliqueGraph:
    """Union-find forest over pair labels 1..n with size-aware unions."""

    __slots__ = ("n", "rounds_applied", "max_size", "_parent", "_size")

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one vertex")
        self.n = n
        self.rounds_applied = 0
        self.max_size = 1
        self._parent = list(range(n + 1))
        self._size = [1] * (n + 1)

    def find(self, x: int) -> int:
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]
        if self._size[ra] > self.max_size:
            self.max_size = self._size[ra]
        return True

    def component_sizes(self) -> Counter:
        roots = {self.find(v) for v in range(1, self.n + 1)}
        return Counter(self._size[r] for r in roots)


def graph_step(g: CliqueGraph, c: CycleStructure, rng: np.random.Generator) -> CliqueGraph:
    """Add one clique per nontrivial cycle of c on a uniform label subset.

    The subset has size support(c) and is partitioned uniformly into blocks
    matching the cycle lengths; each block is unioned into one component.
    Mutates g in place and returns it.
    """
    s = support(c)
    if s > g.n:
        raise InfeasibleError(f"support {s} exceeds vertex count {g.n}")
    if s:
        labels = _sample_subset(g.n, s, rng)
        rng.shuffle(labels)
        pos = 0
        for ell, count in enumerate(c, start=1):
            if ell == 1:
                continue
            for _ in range(count):
                anchor = labels[pos]
                for off in range(1, ell):
                    g.union(anchor, labels[pos + off])
                pos += ell
    g.rounds_applied += 1
    return g


def giant_fraction(g: CliqueGraph) -> float:
    """Largest component size divided by the vertex count."""
    return g.max_size / g.n


@dataclass(frozen=True)
class GiantEstimate:
    beta: float
    samples: tuple
    mean: float = field(init=False)
    std: float = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.size == 0 or arr.min() <= 0 or arr.max() > 1:
            raise ValueError("giant fractions must lie in (0, 1]")
        object.__setattr__(self, "mean", float(arr.mean()))
        object.__setattr__(self, "std", float(arr.std(ddof=1)) if arr.size > 1 else 0.0)


def _giant_from_edges(n: int, heads: np.ndarray, tails: np.ndarray) -> float:
    if heads.size == 0:
        return 1 / n
    data = np.ones(heads.size, dtype=np.int8)
    adj = coo_matrix((data, (heads - 1, tails - 1)), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return int(np.bincount(labels).max()) / n


def _theta_sample_k2(n: int, rounds: int, rng: np.random.Generator) -> float:
    # for pair rematches a round adds one uniform edge with probability 2/3
    active = int(rng.binomial(rounds, 2 / 3))
    heads = rng.integers(1, n + 1, size=active)
    tails = rng.integers(1, n, size=active)
    tails = tails + (tails >= heads)
    return _giant_from_edges(n, heads, tails)


def theta_hat(
    n: int, k: int, beta: float, reps: int, rng: np.random.Generator
) -> GiantEstimate:
    """Giant-fraction estimate after floor(beta*n/kappa_k) iid rematch rounds."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    kappa = float(expected_support(k))
    rounds = int(beta * n / kappa)
    samples = []
    for sub in rng.spawn(reps):
        if k == 2:
            samples.append(_theta_sample_k2(n, rounds, sub))
        else:
            g = CliqueGraph(n)
            for _ in range(rounds):
                c = cycle_structure(sample_uniform_matching(k, sub))
                graph_step(g, c, sub)
            samples.append(giant_fraction(g))
    return GiantEstimate(beta=beta, samples=tuple(samples))


def quenched_graph_run(n, schedule, rng: np.random.Generator):
    """Iterate graph_step over a prescribed structure schedule.

    Returns the giant-fraction trajectory, one value per round.
    """
    g = CliqueGraph(n)
    out = []
    for c in schedule:
        graph_step(g, c, rng)
        out.append(giant_fraction(g))
    return out


def transposition_giant(
    n: int, gamma: float, reps: int, rng: np.random.Generator
) -> GiantEstimate:
    """Giant fractions after ceil(gamma*n) single-transposition rounds.

    Each round contributes one uniform edge, so the endpoint is the giant
    fraction of a uniform multigraph with ceil(gamma*n) edges.
    """
    m = math.ceil(gamma * n)
    samples = []
    for sub in rng.spawn(reps):
        heads = sub.integers(1, n + 1, size=m)
        tails = sub.integers(1, n, size=m)
        tails = tails + (tails >= heads)
        samples.append(_giant_from_edges(n, heads, tails))
    return GiantEstimate(beta=gamma, samples=tuple(samples))
