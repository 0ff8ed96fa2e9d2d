"""Contiguity-maximizing memory ordering of a tile's output sets.

Two output sets placed next to each other save one read burst for every
consumer tile that reads both.  The weight of a pair is therefore the number
of consumers reading both sets, and the best layout is a maximum-weight
Hamiltonian path over the sets.  ``solve_layout_exact`` solves that exactly
with a subset dynamic program; ``solve_layout_greedy`` is the cheap fallback
for wide kernels.

For any layout, per-producer read bursts equal the number of maximal runs of
consecutive positions among the sets consumed from that producer, so
``total read bursts = total consumed sets - objective`` holds as an identity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mars import InputEntry, Mars
from .kernel import TileCoord


class TooManyMars(ValueError):
    """Exact solver refused: subset DP over more than 20 sets."""


EXACT_LIMIT = 20


@dataclass(frozen=True)
class WeightMatrix:
    n: int
    w: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.w) != self.n or any(len(r) != self.n for r in self.w):
            raise ValueError("weight matrix must be n x n")
        for i in range(self.n):
            if self.w[i][i] != 0:
                raise ValueError("weight matrix diagonal must be zero")
            for j in range(self.n):
                if self.w[i][j] != self.w[j][i]:
                    raise ValueError("weight matrix must be symmetric")
                if self.w[i][j] < 0:
                    raise ValueError("weights must be non-negative")


@dataclass(frozen=True)
class LayoutOrder:
    """``gamma[i]`` is the memory position of output set ``i``."""

    gamma: tuple[int, ...]
    objective: int

    @property
    def order(self) -> tuple[int, ...]:
        """Set ids by increasing memory position (inverse of gamma)."""
        pos = [0] * len(self.gamma)
        for i, g in enumerate(self.gamma):
            pos[g] = i
        return tuple(pos)


def build_weights(outputs: list[Mars]) -> WeightMatrix:
    """w[i][j] = number of consumer tiles that read both set i and set j."""
    n = len(outputs)
    sigs = [set(m.signature) for m in outputs]
    w = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            c = len(sigs[i] & sigs[j])
            w[i][j] = w[j][i] = c
    return WeightMatrix(n=n, w=tuple(tuple(r) for r in w))


def _path_value(order: list[int], w) -> int:
    return sum(w[a][b] for a, b in zip(order, order[1:]))


def _subset_dp(wm: WeightMatrix, pins: dict[int, int] | None = None) -> int:
    """Best Hamiltonian-path weight, optionally with positions pinned to sets.

    ``pins`` maps position -> set id; unpinned sets may only occupy unpinned
    positions.  Returns -1 when the pin pattern is infeasible.
    """
    n = wm.n
    if n == 0:
        return 0
    pins = pins or {}
    w = np.array(wm.w, dtype=np.int64)
    pinned_sets = set(pins.values())
    unpinned = [i for i in range(n) if i not in pinned_sets]
    idx = np.arange(n)
    dp = np.full((1 << n, n), -1, dtype=np.int64)
    start = [pins[0]] if 0 in pins else unpinned
    for i in start:
        dp[1 << i, i] = 0
    for mask in range(1, 1 << n):
        row = dp[mask]
        members = np.nonzero(row >= 0)[0]
        if members.size == 0:
            continue
        k = bin(mask).count("1")
        if k == n:
            continue
        if k in pins:
            nxt = [pins[k]] if not mask >> pins[k] & 1 else []
        else:
            nxt = [j for j in unpinned if not mask >> j & 1]
        if not nxt:
            continue
        free = np.array(nxt)
        cand = (row[members, None] + w[np.ix_(members, free)]).max(axis=0)
        tmasks = mask | (1 << free)
        cur = dp[tmasks, free]
        upd = cand > cur
        if upd.any():
            dp[tmasks[upd], free[upd]] = cand[upd]
    _ = idx
    return int(dp[(1 << n) - 1].max())


def _greedy_witness(wm: WeightMatrix, pins: dict[int, int]) -> int:
    """Value of one cheap pin-respecting completion (lower bound on optimum)."""
    n = wm.n
    w = wm.w
    pinned_sets = set(pins.values())
    used = set()
    order = []
    for k in range(n):
        if k in pins:
            pick = pins[k]
        else:
            best = -1
            pick = -1
            for c in range(n):
                if c in pinned_sets or c in used:
                    continue
                score = w[order[-1]][c] if order else 0
                if score > best:
                    best, pick = score, c
            if pick < 0:
                return -1
        if pick in used:
            return -1
        used.add(pick)
        order.append(pick)
    return _path_value(order, w)


def solve_layout_exact(wm: WeightMatrix, limit: int = EXACT_LIMIT) -> LayoutOrder:
    """Optimal layout via subset DP, deterministic tie-break.

    Among all optimal orders the one with the lexicographically smallest
    ``gamma`` vector is returned, reconstructed by pinning each set in turn to
    its earliest feasible position.  Worst case is exponential in the number
    of sets, hence the hard limit.
    """
    n = wm.n
    if n > limit:
        raise TooManyMars(f"{n} output sets exceed the exact-solver limit of {limit}")
    if n == 0:
        return LayoutOrder(gamma=(), objective=0)
    best = _subset_dp(wm)
    gamma = [0] * n
    if best == 0:
        return LayoutOrder(gamma=tuple(range(n)), objective=0)
    pins: dict[int, int] = {}
    for s in range(n):
        placed = False
        for pos in range(n):
            if pos in pins:
                continue
            trial = dict(pins)
            trial[pos] = s
            if _greedy_witness(wm, trial) == best or _subset_dp(wm, trial) == best:
                pins[pos] = s
                gamma[s] = pos
                placed = True
                break
        if not placed:
            raise AssertionError("no feasible position during layout reconstruction")
    return LayoutOrder(gamma=tuple(gamma), objective=best)


def solve_layout_greedy(wm: WeightMatrix) -> LayoutOrder:
    """Chain-merge heuristic: link the heaviest endpoint pair first.

    Positive-weight endpoint pairs are linked in (weight desc, index asc)
    order whenever both ends are still chain endpoints of different chains;
    leftover chains are concatenated by smallest member.  With all-zero
    weights this degenerates to the identity order.
    """
    n = wm.n
    w = wm.w
    chains = {i: [i] for i in range(n)}
    chain_of = list(range(n))
    pairs = sorted(
        ((i, j) for i in range(n) for j in range(i + 1, n) if w[i][j] > 0),
        key=lambda p: (-w[p[0]][p[1]], p[0], p[1]),
    )
    for i, j in pairs:
        ci, cj = chain_of[i], chain_of[j]
        if ci == cj:
            continue
        a, b = chains[ci], chains[cj]
        if i not in (a[0], a[-1]) or j not in (b[0], b[-1]):
            continue
        if a[0] == i:
            a.reverse()
        if b[-1] == j:
            b.reverse()
        a.extend(b)
        for x in b:
            chain_of[x] = ci
        del chains[cj]
    order: list[int] = []
    for c in sorted(chains.values(), key=min):
        if c[0] > c[-1]:
            c.reverse()
        order.extend(c)
    gamma = [0] * n
    for pos, s in enumerate(order):
        gamma[s] = pos
    return LayoutOrder(gamma=tuple(gamma), objective=_path_value(order, w))


@dataclass(frozen=True)
class BurstCounts:
    per_producer: tuple[tuple[TileCoord, int], ...]
    total: int


def count_read_bursts(layout: LayoutOrder, inputs: list[InputEntry]) -> BurstCounts:
    """Maximal runs of consecutive layout positions, per producer tile.

    Runs never coalesce across producers: each producer owns its own memory
    block, so consecutive positions only matter within one producer.
    """
    by_producer: dict[TileCoord, list[int]] = {}
    for e in inputs:
        by_producer.setdefault(e.producer_offset, []).append(layout.gamma[e.mars_id])
    counts = []
    total = 0
    for off in sorted(by_producer):
        positions = sorted(by_producer[off])
        runs = sum(1 for k, p in enumerate(positions) if k == 0 or p != positions[k - 1] + 1)
        counts.append((off, runs))
        total += runs
    return BurstCounts(per_producer=tuple(counts), total=total)


@dataclass(frozen=True)
class AllocationMap:
    """Disjoint, uniformly sized, bus-aligned block per tile (bases in bytes)."""

    bases: dict[TileCoord, int]
    capacity_bytes: int

    def base_bit(self, tile: TileCoord) -> int:
        return self.bases[tile] * 8


def allocate_blocks(schedule: list[TileCoord], capacity_bytes: int, bus_width_bits: int = 64) -> AllocationMap:
    if capacity_bytes <= 0:
        raise ValueError("capacity must be positive")
    word_bytes = bus_width_bits // 8
    if capacity_bytes % word_bytes:
        raise ValueError(f"capacity {capacity_bytes} B is not a multiple of the {word_bytes} B bus word")
    bases = {tc: k * capacity_bytes for k, tc in enumerate(schedule)}
    return AllocationMap(bases=bases, capacity_bytes=capacity_bytes)
