"""Nerve complexes of tile unions and their GF(2) Betti numbers.

Tiles of the implemented tessellations meet only along edges and at
corners, so the corner incidence (which tiles meet at each corner)
determines every nonempty intersection.  The nerve is assembled from one
full simplex per corner, truncated at ``k_max``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graphs import Graph, HyperbolicTiling, Lattice


class NerveError(RuntimeError):
    pass


class CornerOracle:
    """Corner incidence of a tessellation, keyed by a canonical corner id."""

    def __init__(self, graph: Graph):
        if isinstance(graph, HyperbolicTiling):
            self.per_corner = graph.q
        elif isinstance(graph, Lattice):
            self.per_corner = 2**graph.dim
            self._offsets = list(itertools.product((0, 1), repeat=graph.dim))
        else:
            raise NerveError(f"{graph.descriptor()} is not a tessellation with corner data")
        self.graph = graph

    def corners_of(self, tile) -> list[tuple]:
        """Corner sets (tuples of the tiles meeting there) of one tile."""
        g = self.graph
        if isinstance(g, HyperbolicTiling):
            out = [tuple(sorted(c)) for c in g.corners(tile)]
        else:
            out = []
            for d in self._offsets:
                c = tuple(x + y for x, y in zip(tile, d))
                out.append(tuple(sorted(tuple(a - b for a, b in zip(c, e)) for e in self._offsets)))
        for c in out:
            if len(c) != self.per_corner:
                raise NerveError(f"corner {c} of {tile} has {len(c)} tiles, expected {self.per_corner}")
        return out

    def intersecting(self, tile) -> set:
        """All other tiles meeting ``tile`` in at least one point."""
        return {u for c in self.corners_of(tile) for u in c} - {tile}

    def r(self) -> int:
        return len(self.intersecting(self.graph.base_vertex))


@dataclass
class NerveComplex:
    tiles: list
    simplices: list  # simplices[k] = sorted list of (k+1)-tuples of tile indices
    k_max: int
    index: list = field(default_factory=list)  # index[k]: simplex -> position

    def __post_init__(self):
        self.index = [{s: i for i, s in enumerate(sk)} for sk in self.simplices]

    def count(self, k: int) -> int:
        return len(self.simplices[k]) if 0 <= k < len(self.simplices) else 0

    def boundary_columns(self, k: int) -> list[int]:
        """Columns of the GF(2) boundary map C_k -> C_{k-1} as bitmasks."""
        if k <= 0 or k > self.k_max:
            return [0] * self.count(max(k, 0))
        idx = self.index[k - 1]
        cols = []
        for s in self.simplices[k]:
            m = 0
            for j in range(k + 1):
                m |= 1 << idx[s[:j] + s[j + 1 :]]
            cols.append(m)
        return cols

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * len(sk) for k, sk in enumerate(self.simplices))


def _colex(simplices: Iterable[tuple]) -> list:
    return sorted(simplices, key=lambda s: s[::-1])


def build_nerve(tiles: Sequence, oracle: CornerOracle, k_max: int = 2) -> NerveComplex:
    """Nerve of the cover of the union of ``tiles`` by the tiles themselves.

    Tile indices follow the given order.
    """
    tiles = list(tiles)
    pos = {t: i for i, t in enumerate(tiles)}
    if len(pos) != len(tiles):
        raise NerveError("duplicate tiles")
    layers = [set() for _ in range(k_max + 1)]
    seen = set()
    for t in tiles:
        layers[0].add((pos[t],))
        for c in oracle.corners_of(t):
            if c in seen:
                continue
            seen.add(c)
            members = sorted(pos[u] for u in c if u in pos)
            for size in range(2, min(len(members), k_max + 1) + 1):
                layers[size - 1].update(itertools.combinations(members, size))
    return NerveComplex(tiles, [_colex(sk) for sk in layers], k_max)


def gf2_rank(columns: Iterable[int]) -> int:
    """Rank over GF(2) of bit-packed columns (pivot = highest set bit)."""
    pivots: dict[int, int] = {}
    rank = 0
    for col in columns:
        while col:
            h = col.bit_length() - 1
            piv = pivots.get(h)
            if piv is None:
                pivots[h] = col
                rank += 1
                break
            col ^= piv
    return rank


def betti(cx: NerveComplex, k: int) -> int:
    if not 0 <= k < cx.k_max:
        raise NerveError(f"betti({k}) needs k_max > {k}, complex has k_max={cx.k_max}")
    rk = 0 if k == 0 else gf2_rank(cx.boundary_columns(k))
    rk1 = gf2_rank(cx.boundary_columns(k + 1))
    return cx.count(k) - rk - rk1


def betti_vector(cx: NerveComplex) -> list[int]:
    """beta_0..beta_{k_max-1}; ranks are computed once per boundary map."""
    ranks = [0] + [gf2_rank(cx.boundary_columns(k)) for k in range(1, cx.k_max + 1)]
    return [cx.count(k) - ranks[k] - ranks[k + 1] for k in range(cx.k_max)]


def boundary_squared_is_zero(cx: NerveComplex, k: int) -> bool:
    """d_k d_{k+1} = 0 over GF(2)."""
    lower = cx.boundary_columns(k)
    for col in cx.boundary_columns(k + 1):
        acc = 0
        while col:
            low = col & -col
            acc ^= lower[low.bit_length() - 1]
            col ^= low
        if acc:
            return False
    return True


@dataclass
class SimplexBoundReport:
    r: int
    m: int
    counts: list
    bounds: list

    @property
    def passed(self) -> bool:
        return all(c <= b for c, b in zip(self.counts, self.bounds))


def simplex_bound_check(cx: NerveComplex, r: int) -> SimplexBoundReport:
    """count_k <= C(r, k+1) * m for each built dimension k >= 1."""
    m = len(cx.tiles)
    ks = range(1, cx.k_max + 1)
    rep = SimplexBoundReport(r, m, [cx.count(k) for k in ks], [math.comb(r, k + 1) * m for k in ks])
    if not rep.passed:
        raise NerveError(f"simplex count exceeds C(r,k+1)m: {rep}")
    return rep


def component_count(tiles: Sequence, oracle: CornerOracle) -> int:
    """Connected components of the tile-intersection graph (union-find)."""
    parent = {t: t for t in tiles}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t in tiles:
        for u in oracle.intersecting(t):
            if u in parent:
                a, b = find(t), find(u)
                if a != b:
                    parent[a] = b
    return len({find(t) for t in tiles})


# ----------------------------------------------------------------------


@dataclass
class BettiScalingTable:
    graph: str
    rows: list  # (size, trial, beta_0, beta_1, edges, triangles, bound_ok)
    slope: float  # least squares through the origin
    r_squared: float
    c_low: float
    c_high: float

    def medians(self) -> dict:
        out = {}
        for n in sorted({r[0] for r in self.rows}):
            out[n] = float(np.median([r[3] for r in self.rows if r[0] == n]))
        return out


def fit_through_origin(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Slope and centred R^2 of y ~ slope * x."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope = float(x @ y / (x @ x))
    ss_res = float(((y - slope * x) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return slope, 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")


def betti_trial(graph: Graph, seed: int, size: int, key: tuple) -> tuple:
    from .growth import run_to_size

    state, _ = run_to_size(graph, seed, size, key=key)
    oracle = CornerOracle(graph)
    cx = build_nerve(state.order, oracle, k_max=2)
    b0, b1 = betti_vector(cx)
    rep = simplex_bound_check(cx, oracle.r())
    return (size, key[-1], b0, b1, cx.count(1), cx.count(2), rep.passed and b1 <= rep.bounds[0])


def betti_scaling_experiment(graph: Graph, sizes: Sequence[int], trials: int, seed: int, jobs: int = 1) -> BettiScalingTable:
    from .parallel import map_trials

    tasks = [(graph, seed, n, (si, t)) for si, n in enumerate(sizes) for t in range(trials)]
    rows = map_trials(betti_trial, tasks, jobs)
    slope, r2 = fit_through_origin([r[0] for r in rows], [r[3] for r in rows])
    ratios = [r[3] / r[0] for r in rows]
    return BettiScalingTable(graph.descriptor(), rows, slope, r2, min(ratios), max(ratios))
