"""Tilings, the grid map Phi, the two-tiling coupling, the
distance-preserving coupling, and the three-stage coupling.

Partitions are viewed as tilings of (0,1] on the 1/n grid; widths are kept
as integer unit counts throughout.  A TilingPair tracks two tilings with a
maximal equal-width matching between their tiles and one distinguished tile
on each side.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import (
    CycleStructure,
    Partition,
    PerfectMatching,
    cycle_structure,
    partition_of,
    swap_distance_between,
)
from .sampling import (
    _swap_slots,
    expected_distance,
    expected_support,
    sample_structure,
    sample_uniform_matching,
)


# ---------------------------------------------------------------------------
# single-tiling marginal evolution


@dataclass(frozen=True)
class Tiling:
    """Tile widths in grid units (multiples of 1/n), in layout order."""

    n: int
    tiles: Tuple[int, ...]

    def __post_init__(self):
        if sum(self.tiles) != self.n or any(w < 1 for w in self.tiles):
            raise ValueError("tile widths must be positive units summing to n")

    def sorted(self) -> "Tiling":
        return Tiling(self.n, tuple(sorted(self.tiles, reverse=True)))


def _locate(tiles, u: int) -> int:
    """Index of the tile containing grid point u (1-based units)."""
    acc = 0
    for idx, w in enumerate(tiles):
        acc += w
        if u <= acc:
            return idx
    raise ValueError("grid point beyond the layout")


def marginal_step(p: Tiling, u: int, v: int, b: int) -> Tiling:
    """One marginal move of a tiling laid out with the marked tile first.

    u and v are grid points in units (u must fall inside the first tile; the
    canonical choice is u = 1).  If v falls in a different tile, that tile
    merges with the first.  If v falls in the first tile, the tile splits
    into widths (v-1, w-(v-1)) when b = 1 (a zero-width left part is a
    no-op), and nothing changes when b = 0.  Output is sorted non-increasing.
    """
    tiles = list(p.tiles)
    if not (1 <= u <= tiles[0]):
        raise ValueError("u must lie in the first (marked) tile")
    if not (1 <= v <= p.n):
        raise ValueError("v outside the grid")
    ti = _locate(tiles, v)
    if ti == 0:
        if b == 1 and v - 1 >= 1:
            w = tiles[0]
            tiles[0] = v - 1
            tiles.append(w - (v - 1))
    else:
        tiles[0] += tiles[ti]
        del tiles[ti]
    return Tiling(p.n, tuple(sorted(tiles, reverse=True)))


# ---------------------------------------------------------------------------
# the grid map Phi


def _phi_params(a: int, b_: int):
    if a > b_:
        raise ValueError("requires a <= b_")
    g = (a + 1) // 2 - 1  # ceil(a/2) - 1
    return g


def phi_map(alpha: int, beta: int, n: int, v: int) -> int:
    """Grid bijection of {2..n} aligning an unmatched tile of width alpha
    (units) with one of width beta >= alpha.

    Piecewise: identity on [2, g+1] and (beta, n]; v - g on (alpha, beta];
    v + beta - alpha on (g+1, alpha]; where g = ceil(alpha/2) - 1.  When
    alpha is even the raw map misses one grid point and hits another twice;
    the point g+2 is remapped to itself to restore bijectivity.
    """
    g = _phi_params(alpha, beta)
    if v == 1:
        raise ValueError("v = 1 is reserved for the first marker")
    if not (2 <= v <= n):
        raise ValueError("v outside the grid")
    if alpha % 2 == 0 and v == g + 2:
        return v
    if v > beta:
        return v
    if alpha < v <= beta:
        return v - g
    if g + 1 < v <= alpha:
        return v + beta - alpha
    return v  # 2 <= v <= g+1


def phi_inverse(alpha: int, beta: int, n: int, v: int) -> int:
    """Inverse of :func:`phi_map` with the same (alpha, beta)."""
    g = _phi_params(alpha, beta)
    if v == 1:
        raise ValueError("v = 1 is reserved for the first marker")
    if not (2 <= v <= n):
        raise ValueError("v outside the grid")
    if v > beta:
        return v
    if v <= g + 1:
        return v
    if alpha % 2 == 0 and v == g + 2:
        return v
    if alpha % 2 == 0 and v == beta - g:
        return beta
    if v <= beta - g:
        return v + g
    return v - (beta - alpha)


def phi_profile(alpha: int, beta: int, n: int) -> np.ndarray:
    """Vectorized phi_map over all v in {2..n} (for exhaustive checks)."""
    v = np.arange(2, n + 1)
    g = (alpha + 1) // 2 - 1
    out = v.copy()
    out = np.where((alpha < v) & (v <= beta), v - g, out)
    out = np.where((g + 1 < v) & (v <= alpha), v + beta - alpha, out)
    if alpha % 2 == 0 and g + 2 >= 2:
        out = np.where(v == g + 2, v, out)
    return out


# ---------------------------------------------------------------------------
# tiling pairs and the coupled step


@dataclass(frozen=True)
class TilingPair:
    """Two tilings with a maximal equal-width matching and marked tiles.

    ``matched`` lists widths matched one-to-one across the pair; ``unm_p``
    and ``unm_q`` are the leftover widths on each side (all non-increasing).
    ``dist`` locates the distinguished tiles: ('m', i) = matched pair i, or
    ('u', i, j) = unm_p[i] and unm_q[j]; None until the first refresh.
    """

    n: int
    matched: Tuple[int, ...]
    unm_p: Tuple[int, ...]
    unm_q: Tuple[int, ...]
    dist: Optional[tuple] = None

    @classmethod
    def from_partitions(cls, p: Partition, q: Partition) -> "TilingPair":
        if p.n != q.n:
            raise ValueError("partitions of different n")
        cp, cq = Counter(p), Counter(q)
        matched = []
        for w, cnt in sorted(cp.items(), reverse=True):
            matched.extend([w] * min(cnt, cq.get(w, 0)))
        shared = Counter(matched)
        unm_p = sorted((cp - shared).elements(), reverse=True)
        unm_q = sorted((cq - shared).elements(), reverse=True)
        return cls(
            n=p.n,
            matched=tuple(sorted(matched, reverse=True)),
            unm_p=tuple(unm_p),
            unm_q=tuple(unm_q),
        )

    @property
    def coalesced(self) -> bool:
        return not self.unm_p and not self.unm_q

    @property
    def unmatched_count(self) -> int:
        return len(self.unm_p) + len(self.unm_q)

    def smallest_unmatched(self) -> Optional[int]:
        widths = list(self.unm_p) + list(self.unm_q)
        return min(widths) if widths else None

    def partition_p(self) -> Partition:
        return Partition(list(self.matched) + list(self.unm_p))

    def partition_q(self) -> Partition:
        return Partition(list(self.matched) + list(self.unm_q))

    def dist_widths(self) -> Tuple[int, int]:
        if self.dist is None:
            raise ValueError("no distinguished tile yet (refresh required)")
        if self.dist[0] == "m":
            w = self.matched[self.dist[1]]
            return w, w
        return self.unm_p[self.dist[1]], self.unm_q[self.dist[2]]


def _apply_layout_move(dist_w: int, rest: List[int], shared: List[int],
                       v: int, coin: int):
    """Move for one side: layout is [dist] + rest + shared (unit widths).

    Returns (new_dist_width, rest_after, consumed_shared_index_or_None,
    fragment_or_None).  rest holds the side's other unmatched tiles, shared
    the matched region (identical layout on both sides).
    """
    if v <= dist_w:
        if coin == 1 and v - 1 >= 1:
            return v - 1, rest, None, dist_w - (v - 1)
        return dist_w, rest, None, None
    pos = dist_w
    for idx, w in enumerate(rest):
        pos += w
        if v <= pos:
            return dist_w + w, rest[:idx] + rest[idx + 1:], None, None
    for idx, w in enumerate(shared):
        pos += w
        if v <= pos:
            return dist_w + w, rest, idx, None
    raise ValueError("v beyond the layout")


def schramm_step(pair: TilingPair, refresh: bool,
                 rng: np.random.Generator) -> TilingPair:
    """One coupled swap of the two tilings with shared randomness.

    On a refresh the marked tiles are redrawn by one shared uniform grid
    point over the aligned layout (unmatched tiles left, matched right); the
    second marker is then drawn uniformly and transported to the other
    tiling directly (marked tiles matched) or through the grid map Phi
    (marked tiles unmatched).  A single shared coin accepts or rejects
    splits on both sides.
    """
    n = pair.n
    if refresh or pair.dist is None:
        w_unm = sum(pair.unm_p)
        u = int(rng.integers(1, n + 1))
        if u <= w_unm:
            ip = _locate(pair.unm_p, u)
            iq = _locate(pair.unm_q, u)
            dist = ("u", ip, iq)
        else:
            im = _locate(pair.matched, u - w_unm)
            dist = ("m", im)
    else:
        dist = pair.dist

    # aligned layouts with the marked tiles first
    if dist[0] == "m":
        a = b_ = pair.matched[dist[1]]
        shared = [w for i, w in enumerate(pair.matched) if i != dist[1]]
        rest_p = list(pair.unm_p)
        rest_q = list(pair.unm_q)
    else:
        a = pair.unm_p[dist[1]]
        b_ = pair.unm_q[dist[2]]
        shared = list(pair.matched)
        rest_p = [w for i, w in enumerate(pair.unm_p) if i != dist[1]]
        rest_q = [w for i, w in enumerate(pair.unm_q) if i != dist[2]]

    v_p = int(rng.integers(2, n + 1))
    if dist[0] == "m":
        v_q = v_p
    elif a <= b_:
        v_q = phi_map(a, b_, n, v_p)
    else:
        v_q = phi_inverse(b_, a, n, v_p)
    coin = int(rng.integers(0, 2))

    dw_p, rest_p2, cons_p, frag_p = _apply_layout_move(a, rest_p, shared, v_p, coin)
    dw_q, rest_q2, cons_q, frag_q = _apply_layout_move(b_, rest_q, shared, v_q, coin)

    # full multisets, each side keeping matched tiles the *other* side consumed
    side_p = Counter(rest_p2)
    side_q = Counter(rest_q2)
    if frag_p is not None:
        side_p[frag_p] += 1
    if frag_q is not None:
        side_q[frag_q] += 1
    for idx, w in enumerate(shared):
        if idx != cons_p:
            side_p[w] += 1
        if idx != cons_q:
            side_q[w] += 1

    matched = []
    for w, cnt in sorted(side_p.items(), reverse=True):
        matched.extend([w] * min(cnt, side_q.get(w, 0)))
    shared_new = Counter(matched)
    unm_p = sorted((side_p - shared_new).elements(), reverse=True)
    unm_q = sorted((side_q - shared_new).elements(), reverse=True)
    matched.sort(reverse=True)

    if dw_p == dw_q:
        matched.append(dw_p)
        matched.sort(reverse=True)
        new_dist = ("m", matched.index(dw_p))
    else:
        unm_p.append(dw_p)
        unm_p.sort(reverse=True)
        unm_q.append(dw_q)
        unm_q.sort(reverse=True)
        new_dist = ("u", unm_p.index(dw_p), unm_q.index(dw_q))

    return TilingPair(
        n=n,
        matched=tuple(matched),
        unm_p=tuple(unm_p),
        unm_q=tuple(unm_q),
        dist=new_dist,
    )


# ---------------------------------------------------------------------------
# distance-preserving coupling


def _conjugator_candidates(pair_i, pair_j, choice: str):
    """The two transpositions realizing a swap of two sorted pairs."""
    a, b = pair_i
    c, d = pair_j
    if choice == "cross":  # {a,b},{c,d} -> {a,d},{b,c}
        return (a, c), (b, d)
    if choice == "bar":  # -> {a,c},{b,d}
        return (a, d), (b, c)
    raise ValueError("choice must be 'cross' or 'bar'")


def _conjugate_transposition(partner: List[int], x: int, y: int) -> None:
    """In-place conjugation of a partner array by the transposition (x, y)."""
    px, py = partner[x], partner[y]
    if px == y:
        return
    partner[x], partner[py] = py, x
    partner[y], partner[px] = px, y


def distance_preserving_step(mu: PerfectMatching, nu: PerfectMatching,
                             rng: np.random.Generator, timescale: str = "swap",
                             k: int = 2):
    """Advance both chains by the same object transposition.

    A uniform swap of mu (or, on the round timescale, a uniform k-rematch of
    mu realized swap by swap) is expressed as conjugation by an object
    transposition, drawn uniformly among the two that realize each swap, and
    the identical transposition is applied to nu.  The swap distance between
    the chains is exactly invariant; mu's marginal is an exact walk step,
    while nu's move is a no-op whenever the transposition joins one of nu's
    own pairs (probability at most 1/(2(n-1)) per swap).
    """
    if mu.n != nu.n:
        raise ValueError("matchings of different sizes")
    n = mu.n
    slots = list(mu.pairs())
    nu_partner = list(nu.partner)
    choices = ("bar", "cross")

    def do_swap(i, j, choice):
        cands = _conjugator_candidates(
            tuple(sorted(slots[i - 1])), tuple(sorted(slots[j - 1])), choice
        )
        gx, gy = cands[int(rng.integers(0, 2))]
        _swap_slots(slots, i, j, choice)
        _conjugate_transposition(nu_partner, gx, gy)

    if timescale == "swap":
        i = int(rng.integers(1, n + 1))
        j = int(rng.integers(1, n))
        if j >= i:
            j += 1
        do_swap(i, j, choices[int(rng.integers(0, 2))])
    elif timescale == "round":
        from .sampling import swap_sequence_conditional

        c = sample_structure(k, rng)
        seq = swap_sequence_conditional(c, n, rng)
        for i, j, choice in seq.steps:
            do_swap(i, j, choice)
    else:
        raise ValueError("timescale must be 'swap' or 'round'")
    return PerfectMatching.from_pairs(slots), PerfectMatching(nu_partner)


# ---------------------------------------------------------------------------
# three-stage coupling


@dataclass
class CouplingStageConfig:
    """Stage schedule for the three-stage coupling.

    The asymptotic schedule puts the tiling-coupling window of ceil(delta^-9)
    swaps just before the end of ceil(beta*n/kappa) rounds.  At desk scale
    delta^-9 dwarfs the whole run, so when the nominal stage-1 length
    floor((beta*n - delta^-9)/kappa) is not positive, stage 1 instead takes
    the first ``burnin_frac`` of the rounds and the tiling window runs to
    the end.
    """

    beta: float
    delta: float
    n: int
    k: int
    burnin_frac: float = 0.85

    def __post_init__(self):
        if self.beta <= 0 or not (0 < self.delta < 1):
            raise ValueError("need beta > 0 and 0 < delta < 1")
        if not (2 <= self.k <= self.n):
            raise ValueError("need 2 <= k <= n")
        self.kappa = float(expected_support(self.k))
        if self.k <= 8:
            rho, _ = expected_distance(self.k)
        else:
            # rho is only a clock conversion; a seeded Monte Carlo estimate
            # keeps the schedule deterministic for k beyond the exact range
            rho_rng = np.random.default_rng(
                np.random.SeedSequence(0, spawn_key=(self.k,))
            )
            rho, _ = expected_distance(self.k, rho_rng, mc_samples=100_000)
        self.rho = float(rho)
        self.s3_rounds = math.ceil(self.beta * self.n / self.kappa)
        nominal = math.floor(
            (self.beta * self.n - self.delta ** -9) / self.kappa
        )
        if nominal >= 1:
            self.s1_rounds = nominal
            self.clamped = False
        else:
            self.s1_rounds = int(self.burnin_frac * self.s3_rounds)
            self.clamped = True
        self.s1_rounds = max(0, min(self.s1_rounds, self.s3_rounds))
        self.stage2_swap_budget = math.ceil(self.delta ** -9)


@dataclass
class ThreeStageOutcome:
    coalesced: bool
    final_distance: int
    a_delta: Optional[bool]
    coalesce_round: Optional[int]
    rounds: int


def _marked_pair(mu: PerfectMatching, nu: PerfectMatching,
                 rng: np.random.Generator) -> Tuple[int, int]:
    """A transposition (x, y) with nu = (x y) mu (x y), for d(mu, nu) = 1."""
    diff = sorted(set(mu.pairs()) - set(nu.pairs()))
    if len(diff) != 2:
        raise ValueError("matchings are not at swap distance 1")
    (a, b), (c, d) = diff
    if nu.partner[a] == d:  # nu holds {a,d},{b,c}
        cands = ((a, c), (b, d))
    else:  # nu holds {a,c},{b,d}
        cands = ((a, d), (b, c))
    x, y = cands[int(rng.integers(0, 2))]
    assert nu.partner[x] == mu.partner[y] and nu.partner[y] == mu.partner[x]
    return x, y


def _partition_of_slots(slots) -> Partition:
    return partition_of(PerfectMatching.from_pairs(slots))


def three_stage_coupling(mu0: PerfectMatching, nu0: PerfectMatching,
                         cfg: CouplingStageConfig, k: int,
                         rng: np.random.Generator) -> ThreeStageOutcome:
    """Couple two walks started one swap apart.

    Stage 1 evolves mu by exact rounds realized swap-by-swap through shared
    object transpositions, which transports nu rigidly at distance exactly 1.
    If at the stage boundary every unmatched block of the two partitions has
    width at least delta (event A_delta), stage 2 couples the partitions with
    shared-randomness tiling steps until they match or the run ends; any
    leftover rounds preserve the distance unchanged.
    """
    n = mu0.n
    if mu0 == nu0:
        return ThreeStageOutcome(True, 0, None, 0, cfg.s3_rounds)
    marked = list(_marked_pair(mu0, nu0, rng))
    slots = list(mu0.pairs())
    choices = ("bar", "cross")

    from .sampling import swap_sequence_conditional

    def stage1_round():
        c = sample_structure(k, rng)
        seq = swap_sequence_conditional(c, n, rng)
        for i, j, choice in seq.steps:
            cands = _conjugator_candidates(
                tuple(sorted(slots[i - 1])), tuple(sorted(slots[j - 1])), choice
            )
            gx, gy = cands[int(rng.integers(0, 2))]
            _swap_slots(slots, i, j, choice)
            for t in range(2):
                if marked[t] == gx:
                    marked[t] = gy
                elif marked[t] == gy:
                    marked[t] = gx

    for _ in range(cfg.s1_rounds):
        stage1_round()

    # partitions of both chains at the stage boundary
    mu_mid = PerfectMatching.from_pairs(slots)
    perm = list(range(2 * n + 1))
    perm[marked[0]], perm[marked[1]] = marked[1], marked[0]
    nu_mid = mu_mid.relabel(perm)
    pair = TilingPair.from_partitions(partition_of(mu_mid), partition_of(nu_mid))

    if pair.coalesced:
        # the marked transposition joins identity partners, so both chains
        # project to the same partition: the coupled projections have met
        return ThreeStageOutcome(True, 0, True, cfg.s1_rounds, cfg.s3_rounds)
    smallest = pair.smallest_unmatched()
    a_delta = smallest is not None and smallest >= cfg.delta * n
    if not a_delta:
        # stages 2 and 3 fall back to the rigid transport: distance stays 1
        return ThreeStageOutcome(False, 1, False, None, cfg.s3_rounds)

    swaps_used = 0
    for r in range(cfg.s1_rounds, cfg.s3_rounds):
        c = sample_structure(k, rng)
        for ell in c.cycle_lengths(descending=True):
            for s in range(ell - 1):
                if swaps_used >= cfg.stage2_swap_budget:
                    break
                pair = schramm_step(pair, refresh=(s == 0), rng=rng)
                swaps_used += 1
                if pair.coalesced:
                    return ThreeStageOutcome(True, 0, True, r + 1, cfg.s3_rounds)
    final = 0 if pair.coalesced else (2 if pair.unmatched_count >= 3 else 1)
    return ThreeStageOutcome(pair.coalesced, final, True, None, cfg.s3_rounds)


def estimate_contraction(n: int, k: int, beta: float, delta: float,
                         reps: int, rng: np.random.Generator) -> dict:
    """Monte Carlo contraction factor: mean final distance of the
    three-stage coupling over replicas started one swap apart."""
    cfg = CouplingStageConfig(beta=beta, delta=delta, n=n, k=k)
    mu0 = PerfectMatching.identity(n)
    nu0 = PerfectMatching.from_pairs(
        [(1, 4), (2, 3)] + [(2 * i - 1, 2 * i) for i in range(3, n + 1)]
    )
    dists = []
    coals = 0
    a_hits = 0
    for sub in rng.spawn(reps):
        out = three_stage_coupling(mu0, nu0, cfg, k, sub)
        dists.append(out.final_distance)
        coals += out.coalesced
        a_hits += bool(out.a_delta)
    xs = np.array(dists, dtype=float)
    return dict(
        beta=beta, delta=delta, n=n, k=k, reps=reps,
        mean=float(xs.mean()),
        se=float(xs.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0,
        coalesce_rate=coals / reps,
        a_delta_rate=a_hits / reps,
        s1_rounds=cfg.s1_rounds,
        s3_rounds=cfg.s3_rounds,
    )
