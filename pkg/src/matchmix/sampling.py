"""Uniform samplers and swap-sequence generators.

Random streams are numpy ``Generator`` objects supplied by the caller; every
function here is a pure function of (arguments, stream state).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from .core import (
    CycleStructure,
    PerfectMatching,
    class_size,
    cycle_structure,
    double_factorial_odd,
    partitions_of,
    swap_distance,
    support,
)

Choice = str  # 'cross' | 'bar'
_CHOICES = ("bar", "cross")


def sample_uniform_matching(n: int, rng: np.random.Generator) -> PerfectMatching:
    """Exactly uniform over all (2n-1)!! matchings of {1..2n}.

    Sequential partner choice: repeatedly pair the lowest unmatched object
    with a uniform pick among the remaining ones.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    objs = list(range(1, 2 * n + 1))
    partner = [0] * (2 * n + 1)
    i = 0
    while i < 2 * n:
        a = objs[i]
        j = int(rng.integers(i + 1, 2 * n))
        objs[i + 1], objs[j] = objs[j], objs[i + 1]
        b = objs[i + 1]
        partner[a] = b
        partner[b] = a
        i += 2
    return PerfectMatching(partner)


def sample_structure(k: int, rng: np.random.Generator) -> CycleStructure:
    """Cycle structure of a uniform k-matching."""
    return cycle_structure(sample_uniform_matching(k, rng))


def sample_uniform_cycle_via_swaps(ell: int, rng: np.random.Generator) -> PerfectMatching:
    """Uniform over matchings of {1..2*ell} forming a single ell-cycle.

    Inductive construction: start from the identity, keep a set S of visited
    pair slots; at each step rematch a slot from S with a fresh slot, choosing
    uniformly between the two pairings that change the matching.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if ell == 1:
        return PerfectMatching.identity(1)
    slots: List[Tuple[int, int]] = [(2 * m - 1, 2 * m) for m in range(1, ell + 1)]
    order = [int(x) + 1 for x in rng.permutation(ell)]  # S grows along this order
    for s in range(1, ell):
        i = order[int(rng.integers(0, s))]
        j = order[s]
        _swap_slots(slots, i, j, _CHOICES[int(rng.integers(0, 2))])
    return PerfectMatching.from_pairs(slots)


def batch_uniform_cycles(ell: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized version of :func:`sample_uniform_cycle_via_swaps`.

    Returns an int64 array of shape (count,) encoding each sampled matching's
    partner array over objects 0..2*ell-1 in mixed radix base 2*ell (a unique
    key per matching).  Used for high-throughput goodness-of-fit tests.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    rows = np.arange(count)
    a = np.tile(np.arange(0, 2 * ell, 2), (count, 1))
    b = a + 1
    # random slot visiting order per row
    order = np.argsort(rng.random((count, ell)), axis=1)
    for s in range(1, ell):
        i = order[rows, rng.integers(0, s, size=count)]
        j = order[:, s]
        a1, a2 = a[rows, i], b[rows, i]
        b1, b2 = a[rows, j], b[rows, j]
        coin = rng.integers(0, 2, size=count).astype(bool)
        # cross: slots become {a1,b2},{a2,b1}; bar: {a1,b1},{a2,b2}
        b[rows, i] = np.where(coin, b2, b1)
        a[rows, j] = a2
        b[rows, j] = np.where(coin, b1, b2)
    partner = np.empty((count, 2 * ell), dtype=np.int64)
    np.put_along_axis(partner, a, b, axis=1)
    np.put_along_axis(partner, b, a, axis=1)
    base = np.int64(2 * ell)
    key = np.zeros(count, dtype=np.int64)
    for x in range(2 * ell):
        key = key * base + partner[:, x]
    return key


def matching_key(pm: PerfectMatching) -> int:
    """The mixed-radix key matching :func:`batch_uniform_cycles` encoding."""
    n2 = 2 * pm.n
    key = 0
    for x in range(1, n2 + 1):
        key = key * n2 + (pm.partner[x] - 1)
    return key


def _sample_subset(n: int, k: int, rng: np.random.Generator) -> List[int]:
    """Uniform k-subset of {1..n}, sorted ascending."""
    if k > n:
        raise ValueError("k > n")
    if k * 4 >= n:
        return sorted(int(x) + 1 for x in rng.permutation(n)[:k])
    chosen = set()
    while len(chosen) < k:
        chosen.add(int(rng.integers(1, n + 1)))
    return sorted(chosen)


def sample_k_rematch(n: int, k: int, rng: np.random.Generator) -> PerfectMatching:
    """One uniform k-rematch applied to the identity on n pairs.

    Picks k pair slots uniformly, overlays a uniform matching of their 2k
    objects (order-preserving embedding), and keeps every other pair fixed.
    """
    if k < 2 or k > n:
        raise ValueError("need 2 <= k <= n")
    slots = _sample_subset(n, k, rng)
    objs = []
    for s in slots:
        objs.append(2 * s - 1)
        objs.append(2 * s)
    eta = sample_uniform_matching(k, rng)
    partner = [0] * (2 * n + 1)
    for i in range(1, n + 1):
        partner[2 * i - 1] = 2 * i
        partner[2 * i] = 2 * i - 1
    for u, v in eta.pairs():
        x, y = objs[u - 1], objs[v - 1]
        partner[x] = y
        partner[y] = x
    return PerfectMatching(partner)


def expected_support(k: int) -> Fraction:
    """Expected number of non-fixed pairs of a uniform k-rematch: k - k/(2k-1)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return Fraction(k) - Fraction(k, 2 * k - 1)


def expected_distance(k: int, rng: Optional[np.random.Generator] = None,
                      mc_samples: int = 200_000):
    """Expected swap distance of a uniform k-rematch.

    Exact rational for k <= 8 (sum over cycle structures weighted by class
    size); Monte Carlo mean with standard error otherwise.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k <= 8:
        total = double_factorial_odd(k)
        acc = Fraction(0)
        for p in partitions_of(k):
            counts = [0] * k
            for b in p:
                counts[b - 1] += 1
            c = CycleStructure(counts)
            acc += Fraction(swap_distance(c) * class_size(c), total)
        return acc, None
    if rng is None:
        raise ValueError("rng required for Monte Carlo rho estimate (k > 8)")
    xs = np.array([swap_distance(sample_structure(k, rng)) for _ in range(mc_samples)],
                  dtype=float)
    return float(xs.mean()), float(xs.std(ddof=1) / np.sqrt(mc_samples))


@dataclass(frozen=True)
class RematchLaw:
    """Summary of the uniform k-rematch: size, expected support, expected distance."""

    k: int
    kappa: Fraction
    rho: object  # Fraction (exact) or float (Monte Carlo)
    rho_se: Optional[float]

    @classmethod
    def make(cls, k: int, rng: Optional[np.random.Generator] = None) -> "RematchLaw":
        rho, se = expected_distance(k, rng)
        return cls(k=k, kappa=expected_support(k), rho=rho, rho_se=se)


@dataclass
class SwapSequence:
    """A realized sequence of swaps generating one cycle structure.

    ``steps`` holds (first_marker, second_marker, choice) with markers being
    pair-slot indices in 1..n; ``refresh`` flags the first swap of each cycle;
    ``violations`` marks steps whose markers broke the conditional constraints
    (always all-False for conditional sequences).
    """

    n: int
    steps: List[Tuple[int, int, Choice]] = field(default_factory=list)
    refresh: List[bool] = field(default_factory=list)
    violations: List[bool] = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return any(self.violations)


def refresh_times(c: CycleStructure):
    """1-based swap indices at which a new cycle starts (non-increasing
    length processing order).  Empty when d(c) = 0."""
    out = set()
    t = 1
    for l in c.cycle_lengths(descending=True):
        out.add(t)
        t += l - 1
    return out


def _draw_excluding(n: int, excluded, rng: np.random.Generator) -> int:
    if len(excluded) >= n:
        raise ValueError("no admissible marker remains")
    while True:
        x = int(rng.integers(1, n + 1))
        if x not in excluded:
            return x


def swap_sequence_conditional(c: CycleStructure, n: int,
                              rng: np.random.Generator) -> SwapSequence:
    """Swap sequence whose application to the identity is uniform over the
    matchings with cycle structure c.

    Cycles are laid down in non-increasing length order.  At each cycle start
    both markers avoid every slot used by completed cycles; within a cycle the
    first marker is uniform over the current cycle's slots and the second
    avoids all used and current slots.
    """
    if support(c) > n:
        raise ValueError("cycle structure does not fit in n pairs")
    seq = SwapSequence(n=n)
    used = set()
    for l in c.cycle_lengths(descending=True):
        block = set()
        for s in range(l - 1):
            if s == 0:
                i = _draw_excluding(n, used, rng)
                j = _draw_excluding(n, used | {i}, rng)
                block = {i, j}
                seq.refresh.append(True)
            else:
                i = int(rng.choice(sorted(block)))
                j = _draw_excluding(n, used | block, rng)
                block.add(j)
                seq.refresh.append(False)
            seq.steps.append((i, j, _CHOICES[int(rng.integers(0, 2))]))
            seq.violations.append(False)
        used |= block
    return seq


def swap_sequence_relaxed(c: CycleStructure, n: int,
                          rng: np.random.Generator) -> SwapSequence:
    """Relaxed marker law: cycle starts draw both markers almost freely
    (i uniform on [n], j uniform on [n] minus i); within a cycle the second
    marker only avoids the first.  Steps whose markers land on already-used
    or current-cycle slots are flagged as violations."""
    if support(c) > n:
        raise ValueError("cycle structure does not fit in n pairs")
    seq = SwapSequence(n=n)
    used = set()
    for l in c.cycle_lengths(descending=True):
        block = set()
        for s in range(l - 1):
            if s == 0:
                i = int(rng.integers(1, n + 1))
                j = _draw_excluding(n, {i}, rng)
                violation = (i in used) or (j in used)
                block = {i, j}
                seq.refresh.append(True)
            else:
                i = int(rng.choice(sorted(block)))
                j = _draw_excluding(n, {i}, rng)
                violation = (j in used) or (j in block)
                block.add(j)
                seq.refresh.append(False)
            seq.steps.append((i, j, _CHOICES[int(rng.integers(0, 2))]))
            seq.violations.append(violation)
        used |= block
    return seq


def _swap_slots(slots: List[Tuple[int, int]], i: int, j: int, choice: Choice) -> None:
    """Rematch the pairs at 1-based slots i and j in place.

    With sorted contents (a,b) and (c,d): cross -> {a,d},{b,c};
    bar -> {a,c},{b,d}.  The pair containing a stays at slot i.
    """
    a, b = sorted(slots[i - 1])
    c, d = sorted(slots[j - 1])
    if choice == "cross":
        slots[i - 1] = (a, d)
        slots[j - 1] = (b, c)
    elif choice == "bar":
        slots[i - 1] = (a, c)
        slots[j - 1] = (b, d)
    else:
        raise ValueError("choice must be 'cross' or 'bar'")


def apply_sequence(pm: PerfectMatching, seq: SwapSequence) -> PerfectMatching:
    """Apply a swap sequence to pm's canonical pair slots."""
    slots = list(pm.pairs())
    if seq.n != pm.n:
        raise ValueError("sequence and matching sizes differ")
    for i, j, choice in seq.steps:
        _swap_slots(slots, i, j, choice)
    return PerfectMatching.from_pairs(slots)
