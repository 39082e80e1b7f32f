"""Perfect matchings, cycle structures, partitions, and exact enumeration.

A perfect matching pairs up the objects 1..2n.  The reference matching
("identity") is {{1,2},{3,4},...,{2n-1,2n}}.  Overlaying a matching on the
identity yields a multigraph whose cycles have even length 2*l; the vector
counting l-cycles is the matching's cycle structure, and forgetting
multiplicities/order gives an integer partition of n.

Everything here is exact integer combinatorics; the samplers live in
:mod:`matchmix.sampling`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterator, Sequence, Tuple

ENUMERATION_CAP = 8  # (2*8-1)!! = 2,027,025 matchings


class InfeasibleError(ValueError):
    """An exact computation was requested beyond its desk-scale cap."""


def id_partner(x: int) -> int:
    """Partner of object x under the identity matching {{1,2},{3,4},...}."""
    return x + 1 if x % 2 == 1 else x - 1


class PerfectMatching:
    """A fixed-point-free involution on {1,...,2n}, stored as a partner array.

    ``partner[x]`` is the object paired with x (index 0 unused).  Instances
    are immutable and hashable; equality is structural.
    """

    __slots__ = ("n", "partner", "_hash")

    def __init__(self, partner: Sequence[int]):
        partner = tuple(partner)
        if len(partner) % 2 != 1:
            raise ValueError("partner array must have length 2n+1 (slot 0 unused)")
        n2 = len(partner) - 1
        self.n = n2 // 2
        self.partner = partner
        self._hash = None
        for x in range(1, n2 + 1):
            p = partner[x]
            if not (1 <= p <= n2) or p == x or partner[p] != x:
                raise ValueError("not a fixed-point-free involution")

    @classmethod
    def identity(cls, n: int) -> "PerfectMatching":
        partner = [0] * (2 * n + 1)
        for i in range(1, n + 1):
            partner[2 * i - 1] = 2 * i
            partner[2 * i] = 2 * i - 1
        return cls(partner)

    @classmethod
    def from_pairs(cls, pairs) -> "PerfectMatching":
        pairs = list(pairs)
        partner = [0] * (2 * len(pairs) + 1)
        for a, b in pairs:
            if not (1 <= a <= 2 * len(pairs)) or not (1 <= b <= 2 * len(pairs)):
                raise ValueError("object label out of range")
            if partner[a] or partner[b] or a == b:
                raise ValueError("labels repeated across pairs")
            partner[a] = b
            partner[b] = a
        return cls(partner)

    def pairs(self) -> Tuple[Tuple[int, int], ...]:
        """Canonical pair list: each pair (min, max), sorted by min element."""
        out = []
        for x in range(1, 2 * self.n + 1):
            p = self.partner[x]
            if x < p:
                out.append((x, p))
        return tuple(out)

    def relabel(self, perm: Sequence[int]) -> "PerfectMatching":
        """Apply a bijection of {1..2n} (``perm[x]`` = new label of x)."""
        partner = [0] * (2 * self.n + 1)
        for x in range(1, 2 * self.n + 1):
            partner[perm[x]] = perm[self.partner[x]]
        return PerfectMatching(partner)

    def __eq__(self, other):
        return isinstance(other, PerfectMatching) and self.partner == other.partner

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.partner)
        return self._hash

    def __repr__(self):
        return f"PerfectMatching({list(self.pairs())})"


class CycleStructure(tuple):
    """Counts (c_1, c_2, ...) of l-cycles relative to the identity.

    Stored with trailing zeros dropped.  ``sum(l * c_l) == n`` when the
    structure came from an n-matching.
    """

    def __new__(cls, counts):
        counts = list(counts)
        while counts and counts[-1] == 0:
            counts.pop()
        if any(c < 0 for c in counts):
            raise ValueError("negative cycle count")
        return super().__new__(cls, counts)

    @property
    def total_pairs(self) -> int:
        return sum(l * c for l, c in enumerate(self, start=1))

    def cycle_lengths(self, descending: bool = True) -> Tuple[int, ...]:
        """Lengths of the nontrivial cycles, one entry per cycle."""
        lens = []
        for l, c in enumerate(self, start=1):
            if l >= 2:
                lens.extend([l] * c)
        lens.sort(reverse=descending)
        return tuple(lens)


class Partition(tuple):
    """Integer partition: multiset of block sizes, non-increasing order."""

    def __new__(cls, blocks):
        blocks = sorted(blocks, reverse=True)
        if any(b < 1 for b in blocks):
            raise ValueError("blocks must be positive")
        return super().__new__(cls, blocks)

    @property
    def n(self) -> int:
        return sum(self)


def cycle_structure(pm: PerfectMatching) -> CycleStructure:
    """Cycle counts of the multigraph pm union identity, one pass, O(n)."""
    n2 = 2 * pm.n
    seen = bytearray(n2 + 1)
    counts = [0] * pm.n
    for start in range(1, n2 + 1):
        if seen[start]:
            continue
        length = 0
        x = start
        while not seen[x]:
            seen[x] = 1
            y = pm.partner[x]
            seen[y] = 1
            x = id_partner(y)
            length += 1
        counts[length - 1] += 1
    return CycleStructure(counts)


def support(c: CycleStructure) -> int:
    """Number of non-fixed pairs: sum of l*c_l over l >= 2."""
    return sum(l * cnt for l, cnt in enumerate(c, start=1) if l >= 2)


def swap_distance(c: CycleStructure) -> int:
    """Minimal number of 2-rematches to undo c: sum of (l-1)*c_l, l >= 2."""
    return sum((l - 1) * cnt for l, cnt in enumerate(c, start=1) if l >= 2)


def swap_distance_between(a: PerfectMatching, b: PerfectMatching) -> int:
    """Minimal number of swaps from a to b (relabel b to the identity)."""
    if a.n != b.n:
        raise ValueError("matchings have different sizes")
    # perm sends b to the identity: slot i's pair (x, y) -> (2i-1, 2i)
    perm = [0] * (2 * b.n + 1)
    for i, (x, y) in enumerate(b.pairs(), start=1):
        perm[x] = 2 * i - 1
        perm[y] = 2 * i
    return swap_distance(cycle_structure(a.relabel(perm)))


def partition_of(pm: PerfectMatching) -> Partition:
    """The multiset of cycle lengths of pm (an integer partition of n)."""
    c = cycle_structure(pm)
    blocks = []
    for l, cnt in enumerate(c, start=1):
        blocks.extend([l] * cnt)
    return Partition(blocks)


def partition_of_structure(c: CycleStructure) -> Partition:
    blocks = []
    for l, cnt in enumerate(c, start=1):
        blocks.extend([l] * cnt)
    return Partition(blocks)


def apply_swap(pm: PerfectMatching, pair_x, pair_y, choice: str) -> PerfectMatching:
    """Replace two pairs {a,b},{c,d} (each given min-first) by an alternative.

    choice='cross' gives {a,d},{b,c}; choice='bar' gives {a,c},{b,d}.
    These are the two pairings of the four objects that differ from pm.
    """
    a, b = min(pair_x), max(pair_x)
    c, d = min(pair_y), max(pair_y)
    if pm.partner[a] != b or pm.partner[c] != d:
        raise ValueError("pairs are not currently in the matching")
    if len({a, b, c, d}) != 4:
        raise ValueError("pairs are not disjoint")
    partner = list(pm.partner)
    if choice == "cross":
        partner[a], partner[d] = d, a
        partner[b], partner[c] = c, b
    elif choice == "bar":
        partner[a], partner[c] = c, a
        partner[b], partner[d] = d, b
    else:
        raise ValueError("choice must be 'cross' or 'bar'")
    return PerfectMatching(partner)


def double_factorial_odd(n: int) -> int:
    """(2n-1)!! = number of perfect matchings of 2n objects."""
    out = 1
    for i in range(1, 2 * n, 2):
        out *= i
    return out


def enumerate_matchings(n: int, cap: int = ENUMERATION_CAP) -> Iterator[PerfectMatching]:
    """Yield every matching of {1..2n} exactly once (lowest-free-object recursion).

    Raises InfeasibleError beyond the cap; pass a larger ``cap`` to override.
    """
    if n > cap:
        raise InfeasibleError(
            f"enumerate_matchings(n={n}) exceeds cap {cap}; "
            "pass cap= explicitly to override"
        )
    n2 = 2 * n
    partner = [0] * (n2 + 1)

    def rec(lowest: int):
        while lowest <= n2 and partner[lowest]:
            lowest += 1
        if lowest > n2:
            yield PerfectMatching(partner)
            return
        for mate in range(lowest + 1, n2 + 1):
            if partner[mate]:
                continue
            partner[lowest] = mate
            partner[mate] = lowest
            yield from rec(lowest + 1)
            partner[lowest] = 0
            partner[mate] = 0

    yield from rec(1)


def class_size(c: CycleStructure) -> int:
    """Number of n-matchings with cycle structure c:  n! 2^d / prod(c_l! l^c_l).

    d is the swap distance of c and n = sum l*c_l.
    """
    n = c.total_pairs
    num = math.factorial(n) * 2 ** swap_distance(c)
    den = 1
    for l, cnt in enumerate(c, start=1):
        den *= math.factorial(cnt) * l ** cnt
    q, r = divmod(num, den)
    assert r == 0
    return q


def stationary_partition_law(n: int) -> dict:
    """Exact law of the partition of a uniform n-matching, as {Partition: Fraction}."""
    total = double_factorial_odd(n)
    law = {}
    for c in _structures(n):
        law[partition_of_structure(c)] = Fraction(class_size(c), total)
    assert sum(law.values()) == 1
    return law


def _structures(n: int) -> Iterator[CycleStructure]:
    """All cycle structures of n-matchings (equivalently partitions of n)."""
    for p in partitions_of(n):
        counts = [0] * n
        for b in p:
            counts[b - 1] += 1
        yield CycleStructure(counts)


def partitions_of(n: int) -> Iterator[Tuple[int, ...]]:
    """All integer partitions of n, non-increasing tuples."""

    def rec(remaining, maximum):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, maximum), 0, -1):
            for rest in rec(remaining - first, first):
                yield (first,) + rest

    yield from rec(n, n)
