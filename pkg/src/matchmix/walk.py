"""The k-rematch random walk, fixed-point statistics, and exact TV oracles.

The walk's state is a perfect matching of 2n objects; each round picks k of
its n pairs uniformly and re-pairs their 2k objects uniformly.  Exact
total-variation oracles power the transition kernel on the full matching
space and on the lumped partition space; the two must agree pointwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    ENUMERATION_CAP,
    CycleStructure,
    InfeasibleError,
    Partition,
    PerfectMatching,
    cycle_structure,
    double_factorial_odd,
    enumerate_matchings,
    id_partner,
    partitions_of,
    stationary_partition_law,
    support,
)
from .sampling import (
    _sample_subset,
    apply_sequence,
    sample_uniform_matching,
    swap_sequence_conditional,
)

DENSE_KERNEL_LIMIT = 10_000


@dataclass
class WalkState:
    """Walk state: current pair slots plus round and swap clocks.

    ``cs_schedule`` optionally prescribes the cycle structure used at each
    round (quenched mode) instead of drawing a uniform k-rematch.
    """

    n: int
    slots: List[Tuple[int, int]]
    round: int = 0
    swap_clock: int = 0
    cs_schedule: Optional[Sequence[CycleStructure]] = None

    @classmethod
    def start(cls, n: int, cs_schedule=None) -> "WalkState":
        return cls(n=n, slots=[(2 * i - 1, 2 * i) for i in range(1, n + 1)],
                   cs_schedule=cs_schedule)

    @property
    def matching(self) -> PerfectMatching:
        return PerfectMatching.from_pairs(self.slots)


def fixed_point_count(pm) -> int:
    """Number of pairs equal to their identity pair."""
    if isinstance(pm, WalkState):
        return sum(1 for a, b in pm.slots if abs(a - b) == 1 and min(a, b) % 2 == 1)
    return sum(
        1
        for x in range(1, 2 * pm.n + 1, 2)
        if pm.partner[x] == x + 1
    )


def _rematch_slots(slots: List[Tuple[int, int]], which: List[int],
                   rng: np.random.Generator) -> int:
    """Uniformly re-pair the objects of the chosen slots in place.

    Returns the support actually used (non-fixed pairs of the rematch).
    """
    k = len(which)
    objs = []
    for s in which:
        a, b = slots[s - 1]
        objs.append(a)
        objs.append(b)
    objs.sort()
    eta = sample_uniform_matching(k, rng)
    pairs = eta.pairs()
    for pos, (u, v) in zip(which, pairs):
        slots[pos - 1] = (objs[u - 1], objs[v - 1])
    return support(cycle_structure(eta))


def step_round(state: WalkState, k: int, rng: np.random.Generator) -> WalkState:
    """One round of the walk; pure (returns a fresh state)."""
    n = state.n
    if not (2 <= k <= n):
        raise ValueError("need 2 <= k <= n")
    slots = list(state.slots)
    if state.cs_schedule is not None:
        c = state.cs_schedule[state.round]
        seq = swap_sequence_conditional(c, n, rng)
        for i, j, choice in seq.steps:
            from .sampling import _swap_slots

            _swap_slots(slots, i, j, choice)
        used = support(c)
    else:
        which = _sample_subset(n, k, rng)
        used = _rematch_slots(slots, which, rng)
    return replace(
        state,
        slots=slots,
        round=state.round + 1,
        swap_clock=state.swap_clock + used,
    )


@dataclass
class TvOracleResult:
    t: int
    tv_full: Optional[float] = None
    tv_lumped: Optional[float] = None


def _all_rematch_patterns(k: int) -> List[Tuple[Tuple[int, int], ...]]:
    """All matchings of {1..2k} as canonical pair tuples."""
    return [m.pairs() for m in enumerate_matchings(k)]


def exact_tv_full(n: int, k: int, t_max: int,
                  cap: int = ENUMERATION_CAP) -> List[TvOracleResult]:
    """Exact TV distance to uniform of the walk from the identity, t = 0..t_max.

    Builds the full transition kernel on all (2n-1)!! matchings (dense below
    10^4 states, sparse otherwise) and evolves the distribution by
    vector-kernel products.
    """
    if not (2 <= k <= n):
        raise ValueError("need 2 <= k <= n")
    states = list(enumerate_matchings(n, cap=cap))
    index = {m: i for i, m in enumerate(states)}
    m_count = len(states)
    patterns = _all_rematch_patterns(k)
    subsets = list(itertools.combinations(range(n), k))
    prob = 1.0 / (len(subsets) * len(patterns))

    dense = m_count <= DENSE_KERNEL_LIMIT
    if dense:
        kernel = np.zeros((m_count, m_count))
    else:
        from scipy.sparse import lil_matrix

        kernel = lil_matrix((m_count, m_count))

    for si, state in enumerate(states):
        slots = state.pairs()
        for subset in subsets:
            objs = sorted(obj for s in subset for obj in slots[s])
            for pat in patterns:
                partner = list(state.partner)
                for u, v in pat:
                    x, y = objs[u - 1], objs[v - 1]
                    partner[x] = y
                    partner[y] = x
                ti = index[PerfectMatching(partner)]
                kernel[si, ti] += prob
    if not dense:
        kernel = kernel.tocsr()

    dist = np.zeros(m_count)
    dist[index[PerfectMatching.identity(n)]] = 1.0
    pi = 1.0 / m_count
    out = []
    for t in range(t_max + 1):
        out.append(TvOracleResult(t=t, tv_full=0.5 * float(np.abs(dist - pi).sum())))
        if t < t_max:
            dist = dist @ kernel
    return out


def _lumped_kernel_k2(parts: List[Partition], n: int) -> np.ndarray:
    """Closed-form round kernel of the partition chain for k = 2.

    Picking two distinct pair slots: in different blocks they merge unless
    the rematch is the identity (probability 1/3); in the same block of size
    b the block splits with probability 1/3 at a uniform location (fragment
    pair {j, b-j}, j uniform on 1..b-1), otherwise nothing changes.
    """
    index = {p: i for i, p in enumerate(parts)}
    total = n * (n - 1) / 2.0
    kernel = np.zeros((len(parts), len(parts)))
    for pi_, p in enumerate(parts):
        blocks = list(p)
        stay = 0.0
        for m, b in enumerate(blocks):
            if b >= 2:
                w_same = (b * (b - 1) / 2.0) / total
                stay += w_same * (2.0 / 3.0)
                for j in range(1, b):
                    target = Partition(blocks[:m] + blocks[m + 1:] + [j, b - j])
                    kernel[pi_, index[target]] += w_same / 3.0 / (b - 1)
            else:
                pass
            for m2 in range(m + 1, len(blocks)):
                b2 = blocks[m2]
                w_diff = (b * b2) / total
                stay += w_diff / 3.0
                target = Partition(
                    [x for idx, x in enumerate(blocks) if idx not in (m, m2)]
                    + [b + b2]
                )
                kernel[pi_, index[target]] += w_diff * (2.0 / 3.0)
        kernel[pi_, pi_] += stay
    assert np.allclose(kernel.sum(axis=1), 1.0)
    return kernel


def _representative(p: Partition) -> PerfectMatching:
    """A matching whose cycle lengths are exactly the blocks of p."""
    partner = [0] * (2 * p.n + 1)
    offset = 0
    for b in p:
        slots = list(range(offset + 1, offset + b + 1))
        for t in range(b):
            x = 2 * slots[t]
            y = 2 * slots[(t + 1) % b] - 1
            partner[x] = y
            partner[y] = x
        offset += b
    return PerfectMatching(partner)


def _lumped_kernel_generic(parts: List[Partition], n: int, k: int) -> np.ndarray:
    """Lumped kernel by exact summation over k-subsets and rematch patterns,
    evaluated on one representative matching per partition."""
    if n > 12 or k > 4:
        raise InfeasibleError("generic lumped kernel capped at n <= 12, k <= 4")
    index = {p: i for i, p in enumerate(parts)}
    patterns = _all_rematch_patterns(k)
    subsets = list(itertools.combinations(range(n), k))
    prob = 1.0 / (len(subsets) * len(patterns))
    kernel = np.zeros((len(parts), len(parts)))
    for pi_, p in enumerate(parts):
        rep = _representative(p)
        slots = rep.pairs()
        for subset in subsets:
            objs = sorted(obj for s in subset for obj in slots[s])
            for pat in patterns:
                partner = list(rep.partner)
                for u, v in pat:
                    x, y = objs[u - 1], objs[v - 1]
                    partner[x] = y
                    partner[y] = x
                target = Partition(
                    [l for l, cnt in enumerate(
                        cycle_structure(PerfectMatching(partner)), start=1)
                     for _ in range(cnt)]
                )
                kernel[pi_, index[target]] += prob
    return kernel


def exact_tv_lumped(n: int, k: int, t_max: int) -> List[TvOracleResult]:
    """Exact TV of the lumped partition chain from the all-ones partition."""
    if n > 40:
        raise InfeasibleError("lumped oracle capped at n <= 40")
    if not (2 <= k <= n):
        raise ValueError("need 2 <= k <= n")
    parts = [Partition(p) for p in partitions_of(n)]
    if k == 2:
        kernel = _lumped_kernel_k2(parts, n)
    else:
        kernel = _lumped_kernel_generic(parts, n, k)
    index = {p: i for i, p in enumerate(parts)}
    law = stationary_partition_law(n)
    pi = np.array([float(law[p]) for p in parts])
    dist = np.zeros(len(parts))
    dist[index[Partition([1] * n)]] = 1.0
    out = []
    for t in range(t_max + 1):
        out.append(TvOracleResult(t=t, tv_lumped=0.5 * float(np.abs(dist - pi).sum())))
        if t < t_max:
            dist = dist @ kernel
    return out


def coupon_collector_threshold(supports: Sequence[int], lam: float, n: int) -> int:
    """First round index t with cumulative support >= lam * n * log n."""
    target = lam * n * math.log(n)
    if target <= 0:
        return 0
    acc = 0
    for t, s in enumerate(supports, start=1):
        acc += s
        if acc >= target:
            return t
    raise ValueError("support sequence exhausted before reaching the threshold")


def mixing_profile(n: int, k: int, times: Sequence[int], reps: int,
                   rng: np.random.Generator):
    """Fixed-point statistics of independent walks observed at given rounds.

    Yields one record per (time, replica): dict with keys time, replica,
    fixed_points, support_used (cumulative swap clock), coalesced_flag
    (always None here; coupling experiments fill it)."""
    times = sorted(set(int(t) for t in times))
    streams = rng.spawn(reps)
    rows = []
    for rep, sub in enumerate(streams):
        state = WalkState.start(n)
        slots = state.slots
        swap_clock = 0
        t_now = 0
        for t_obs in times:
            while t_now < t_obs:
                which = _sample_subset(n, k, sub)
                swap_clock += _rematch_slots(slots, which, sub)
                t_now += 1
            fp = sum(
                1 for a, b in slots if abs(a - b) == 1 and min(a, b) % 2 == 1
            )
            rows.append(
                dict(time=t_obs, replica=rep, fixed_points=fp,
                     support_used=swap_clock, coalesced_flag=None)
            )
    return rows


def partition_ensemble_k2(n: int, t: int, count: int,
                          rng: np.random.Generator):
    """Vectorized ensemble of k=2 walks from the identity; returns the
    empirical counter of partitions after t rounds over ``count`` replicas."""
    n2 = 2 * n
    rows = np.arange(count)
    partner = np.tile(
        np.arange(n2).reshape(-1, 2)[:, ::-1].reshape(-1), (count, 1)
    )
    for _ in range(t):
        o1 = rng.integers(0, n2, count)
        p1 = partner[rows, o1]
        o2 = rng.integers(0, n2, count)
        bad = (o2 == o1) | (o2 == p1)
        while bad.any():
            o2[bad] = rng.integers(0, n2, int(bad.sum()))
            bad = (o2 == o1) | (o2 == p1)
        p2 = partner[rows, o2]
        r = rng.integers(0, 3, count)
        q_o1 = np.select([r == 0, r == 1, r == 2], [p1, o2, p2])
        q_p1 = np.select([r == 0, r == 1, r == 2], [o1, p2, o2])
        partner[rows, o1] = q_o1
        partner[rows, q_o1] = o1
        partner[rows, p1] = q_p1
        partner[rows, q_p1] = p1

    from collections import Counter

    counts = Counter()
    idp = np.arange(n2).reshape(-1, 2)[:, ::-1].reshape(-1)
    for r_ in range(count):
        row = partner[r_]
        seen = bytearray(n2)
        blocks = []
        for start in range(n2):
            if seen[start]:
                continue
            length = 0
            x = start
            while not seen[x]:
                seen[x] = 1
                y = row[x]
                seen[y] = 1
                x = idp[y]
                length += 1
            blocks.append(length)
        counts[Partition(blocks)] += 1
    return counts
