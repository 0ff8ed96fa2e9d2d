"""Tests for the contiguity-maximizing layout solver and burst counting."""
from __future__ import annotations

import itertools
import random

import pytest

from burstlab.layout import (
    AllocationMap,
    BurstCounts,
    LayoutOrder,
    TooManyMars,
    WeightMatrix,
    allocate_blocks,
    build_weights,
    count_read_bursts,
    solve_layout_exact,
    solve_layout_greedy,
)
from burstlab.mars import analyze_tile
from conftest import random_synthetic


def brute_force_best(wm: WeightMatrix) -> LayoutOrder:
    """Optimal layout by enumerating all gamma permutations (lex-min tie-break)."""
    n = wm.n
    best_val = -1
    best_gamma = None
    for gamma in itertools.permutations(range(n)):
        order = [0] * n
        for s, g in enumerate(gamma):
            order[g] = s
        val = sum(wm.w[a][b] for a, b in zip(order, order[1:]))
        if val > best_val:
            best_val, best_gamma = val, gamma
    return LayoutOrder(gamma=best_gamma, objective=best_val)


def random_weights(rng: random.Random, n: int, hi: int = 4) -> WeightMatrix:
    w = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            w[i][j] = w[j][i] = rng.randint(0, hi)
    return WeightMatrix(n=n, w=tuple(tuple(r) for r in w))


class TestWeightMatrix:
    def test_jacobi1d_weights(self, jacobi1d):
        s = analyze_tile(jacobi1d.tiling, jacobi1d.kernel)
        wm = build_weights(list(s.outputs))
        assert wm.n == 4
        assert wm.w == (
            (0, 0, 1, 1),
            (0, 0, 1, 1),
            (1, 1, 0, 2),
            (1, 1, 2, 0),
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            WeightMatrix(n=2, w=((0,), (0, 0)))
        with pytest.raises(ValueError):
            WeightMatrix(n=2, w=((1, 0), (0, 0)))
        with pytest.raises(ValueError):
            WeightMatrix(n=2, w=((0, 1), (2, 0)))
        with pytest.raises(ValueError):
            WeightMatrix(n=2, w=((0, -1), (-1, 0)))


class TestExactSolver:
    def test_jacobi1d_optimum(self, jacobi1d):
        s = analyze_tile(jacobi1d.tiling, jacobi1d.kernel)
        layout = solve_layout_exact(build_weights(list(s.outputs)))
        assert layout.objective == 4
        assert layout.gamma == (0, 3, 1, 2)
        assert layout.order == (0, 2, 3, 1)

    def test_matches_brute_force(self):
        rng = random.Random(4242)
        for _ in range(60):
            n = rng.randint(1, 7)
            wm = random_weights(rng, n)
            exact = solve_layout_exact(wm)
            brute = brute_force_best(wm)
            assert exact.objective == brute.objective
            assert exact.gamma == brute.gamma

    def test_zero_weights_identity_order(self):
        wm = WeightMatrix(n=5, w=tuple(tuple(0 for _ in range(5)) for _ in range(5)))
        layout = solve_layout_exact(wm)
        assert layout.objective == 0
        assert layout.gamma == (0, 1, 2, 3, 4)

    def test_trivial_sizes(self):
        assert solve_layout_exact(WeightMatrix(n=0, w=())) == LayoutOrder(gamma=(), objective=0)
        assert solve_layout_exact(WeightMatrix(n=1, w=((0,),))).gamma == (0,)

    def test_set_limit(self):
        n = 21
        wm = WeightMatrix(n=n, w=tuple(tuple(0 for _ in range(n)) for _ in range(n)))
        with pytest.raises(TooManyMars):
            solve_layout_exact(wm)
        small = WeightMatrix(n=4, w=tuple(tuple(0 for _ in range(4)) for _ in range(4)))
        with pytest.raises(TooManyMars):
            solve_layout_exact(small, limit=3)
        solve_layout_exact(small, limit=4)


class TestGreedySolver:
    def test_jacobi1d_reaches_optimum(self, jacobi1d):
        s = analyze_tile(jacobi1d.tiling, jacobi1d.kernel)
        layout = solve_layout_greedy(build_weights(list(s.outputs)))
        assert layout.objective == 4
        assert layout.order == (0, 2, 3, 1)

    def test_feasible_and_bounded(self):
        rng = random.Random(777)
        for _ in range(60):
            n = rng.randint(1, 7)
            wm = random_weights(rng, n)
            greedy = solve_layout_greedy(wm)
            assert sorted(greedy.gamma) == list(range(n))
            order = greedy.order
            assert greedy.objective == sum(wm.w[a][b] for a, b in zip(order, order[1:]))
            assert greedy.objective <= solve_layout_exact(wm).objective


class TestBurstCounting:
    def test_optimal_layout_three_bursts(self, jacobi1d):
        s = analyze_tile(jacobi1d.tiling, jacobi1d.kernel)
        layout = solve_layout_exact(build_weights(list(s.outputs)))
        bursts = count_read_bursts(layout, list(s.inputs))
        assert bursts.total == 3
        assert bursts.per_producer == (((-1, -1), 1), ((-1, 0), 1), ((0, -1), 1))

    def test_suboptimal_layout_five_bursts(self, jacobi1d):
        s = analyze_tile(jacobi1d.tiling, jacobi1d.kernel)
        # memory order [3, 0, 1, 2]: breaks both multi-set producers apart
        layout = LayoutOrder(gamma=(1, 2, 3, 0), objective=2)
        assert layout.order == (3, 0, 1, 2)
        bursts = count_read_bursts(layout, list(s.inputs))
        assert bursts.total == 5
        assert bursts.per_producer == (((-1, -1), 1), ((-1, 0), 2), ((0, -1), 2))

    def test_bursts_equal_entries_minus_objective(self, jacobi1d, jacobi2d, seidel2d):
        # the adjacency saved by the layout is exactly one burst per unit
        # of objective, for any layout, optimal or not
        for rs in (jacobi1d, jacobi2d, seidel2d):
            s = analyze_tile(rs.tiling, rs.kernel)
            wm = build_weights(list(s.outputs))
            for layout in (solve_layout_exact(wm), solve_layout_greedy(wm)):
                bursts = count_read_bursts(layout, list(s.inputs))
                assert bursts.total == len(s.inputs) - layout.objective

    def test_identity_on_random_kernels_and_layouts(self):
        rng = random.Random(31)
        for _ in range(50):
            kernel, ts = random_synthetic(rng)
            s = analyze_tile(ts, kernel)
            wm = build_weights(list(s.outputs))
            n = wm.n
            layouts = [solve_layout_exact(wm), solve_layout_greedy(wm)]
            perm = list(range(n))
            rng.shuffle(perm)
            order = [0] * n
            for sid, g in enumerate(perm):
                order[g] = sid
            val = sum(wm.w[a][b] for a, b in zip(order, order[1:]))
            layouts.append(LayoutOrder(gamma=tuple(perm), objective=val))
            for layout in layouts:
                bursts = count_read_bursts(layout, list(s.inputs))
                assert bursts.total == len(s.inputs) - layout.objective
                assert bursts.total == sum(c for _, c in bursts.per_producer)

    def test_preset_totals(self, jacobi2d, seidel2d):
        for rs, expected in ((jacobi2d, 10), (seidel2d, 9)):
            s = analyze_tile(rs.tiling, rs.kernel)
            layout = solve_layout_exact(build_weights(list(s.outputs)))
            assert count_read_bursts(layout, list(s.inputs)).total == expected


class TestAllocation:
    def test_disjoint_aligned_blocks(self):
        sched = [(0, 0), (0, 1), (1, 0), (2, 2)]
        am = allocate_blocks(sched, capacity_bytes=64, bus_width_bits=64)
        assert am.capacity_bytes == 64
        assert [am.bases[tc] for tc in sched] == [0, 64, 128, 192]
        assert am.base_bit((1, 0)) == 128 * 8

    def test_validation(self):
        with pytest.raises(ValueError):
            allocate_blocks([(0, 0)], capacity_bytes=0)
        with pytest.raises(ValueError):
            allocate_blocks([(0, 0)], capacity_bytes=60, bus_width_bits=64)
        allocate_blocks([(0, 0)], capacity_bytes=60, bus_width_bits=32)

    def test_types(self):
        am = AllocationMap(bases={(0, 0): 0}, capacity_bytes=8)
        assert isinstance(am.base_bit((0, 0)), int)
        bc = BurstCounts(per_producer=(((-1, 0), 2),), total=2)
        assert bc.total == 2
