from __future__ import annotations

import numpy as np
import pytest

from edenlab.graphs import HyperbolicTiling, Lattice, RegularTree, ball, sphere
from edenlab.growth import run_to_size
from edenlab.nerve import (
    CornerOracle,
    NerveError,
    betti,
    betti_vector,
    boundary_squared_is_zero,
    build_nerve,
    component_count,
    fit_through_origin,
    gf2_rank,
    simplex_bound_check,
)
from oracles import planar_betti, tiling_hole_count

H73 = HyperbolicTiling(7, 3)


def _dense_rank_gf2(cols: list[int], nrows: int) -> int:
    m = np.array([[(c >> i) & 1 for c in cols] for i in range(nrows)], dtype=np.uint8)
    rank = 0
    for j in range(m.shape[1]):
        piv = next((i for i in range(rank, m.shape[0]) if m[i, j]), None)
        if piv is None:
            continue
        m[[rank, piv]] = m[[piv, rank]]
        for i in range(m.shape[0]):
            if i != rank and m[i, j]:
                m[i] ^= m[rank]
        rank += 1
    return rank


def test_gf2_rank_against_dense():
    rng = np.random.default_rng(0)
    for _ in range(30):
        nrows = int(rng.integers(1, 20))
        cols = [int(rng.integers(0, 1 << nrows)) for _ in range(int(rng.integers(1, 25)))]
        assert gf2_rank(cols) == _dense_rank_gf2(cols, nrows)


def test_fixture_single_tile():
    cx = build_nerve([H73.base_vertex], CornerOracle(H73))
    assert betti_vector(cx) == [1, 0]


def test_fixture_ring():
    cx = build_nerve(sorted(sphere(H73, H73.base_vertex, 1)), CornerOracle(H73))
    assert betti_vector(cx) == [1, 1]


def test_fixture_full_ball():
    cx = build_nerve(sorted(ball(H73, H73.base_vertex, 1).vertices), CornerOracle(H73))
    assert betti_vector(cx) == [1, 0]
    assert [cx.count(k) for k in range(3)] == [8, 14, 7]


def test_r_values():
    assert CornerOracle(H73).r() == 7
    assert CornerOracle(Lattice(2)).r() == 8
    # r = p(q-2): each corner adds q-3 tiles beyond the two edge neighbours it shares
    assert CornerOracle(HyperbolicTiling(5, 4)).r() == 5 * 2


def test_tree_has_no_corners():
    with pytest.raises(NerveError):
        CornerOracle(RegularTree(3))


def test_betti_requires_dimension():
    cx = build_nerve([H73.base_vertex], CornerOracle(H73), k_max=1)
    with pytest.raises(NerveError):
        betti(cx, 1)


@pytest.mark.parametrize("seed", range(6))
def test_square_clusters_match_planar_oracle(seed):
    g = Lattice(2)
    s, _ = run_to_size(g, seed, 600)
    cx = build_nerve(s.order, CornerOracle(g), k_max=3)
    assert tuple(betti_vector(cx)[:2]) == planar_betti(s.order)


@pytest.mark.parametrize("seed", range(4))
def test_heptagon_clusters_match_hole_count(seed):
    s, _ = run_to_size(H73, seed, 800)
    cx = build_nerve(s.order, CornerOracle(H73))
    b0, b1 = betti_vector(cx)
    assert b0 == 1 == component_count(s.order, CornerOracle(H73))
    assert b1 == tiling_hole_count(H73, s.order)
    # q = 3: the nerve is exactly 2-dimensional, so chi = b0 - b1 + b2 with b2 = 0
    assert cx.euler_characteristic() == b0 - b1


def test_sparse_random_tiles_hole_count():
    rng = np.random.default_rng(3)
    pool = sorted(ball(H73, H73.base_vertex, 4).vertices)
    for _ in range(5):
        tiles = [pool[i] for i in sorted(rng.choice(len(pool), 120, replace=False))]
        cx = build_nerve(tiles, CornerOracle(H73))
        b0, b1 = betti_vector(cx)
        assert b0 == component_count(tiles, CornerOracle(H73))
        assert b0 - b1 == cx.euler_characteristic()


def test_boundary_of_boundary():
    s, _ = run_to_size(Lattice(2), 1, 200)
    cx = build_nerve(s.order, CornerOracle(Lattice(2)), k_max=3)
    assert boundary_squared_is_zero(cx, 1) and boundary_squared_is_zero(cx, 2)


def test_simplex_bound_holds_and_raises():
    s, _ = run_to_size(H73, 2, 500)
    cx = build_nerve(s.order, CornerOracle(H73))
    rep = simplex_bound_check(cx, 7)
    assert rep.passed and rep.bounds[0] == 21 * len(s)
    with pytest.raises(NerveError):
        simplex_bound_check(cx, 2)


def test_colex_order():
    cx = build_nerve(sorted(ball(H73, H73.base_vertex, 1).vertices), CornerOracle(H73))
    edges = cx.simplices[1]
    assert edges == sorted(edges, key=lambda e: e[::-1])


def test_fit_through_origin():
    slope, r2 = fit_through_origin([1, 2, 3, 4], [2, 4, 6, 8])
    assert slope == pytest.approx(2) and r2 == pytest.approx(1)
