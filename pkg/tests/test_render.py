from __future__ import annotations

import math

import pytest

from edenlab.graphs import GraphError, HyperbolicTiling, Lattice, RegularTree, ball
from edenlab.render import DiskLayout, _apply, _rot, render_cluster


@pytest.mark.parametrize("pq", [(7, 3), (5, 4), (4, 5)])
def test_frames_consistent_across_every_edge(pq):
    g = HyperbolicTiling(*pq)
    lay = DiskLayout(g)
    tiles = ball(g, g.base_vertex, 3).vertices
    lay.place(tiles)
    for t in tiles:
        for e, (u, b) in enumerate(g.darts(t)):
            if u not in lay.frames:
                continue
            pred = lay.frames[t] @ _rot(2 * math.pi * e / g.p) @ lay.half @ _rot(-2 * math.pi * b / g.p)
            for z in (0, 0.1, 0.2j):
                assert abs(_apply(pred, z) - _apply(lay.frames[u], z)) < 1e-9


def test_tiles_stay_in_disk():
    g = HyperbolicTiling(7, 3)
    lay = DiskLayout(g)
    tiles = ball(g, g.base_vertex, 3).vertices
    lay.place(tiles)
    assert all(abs(z) < 1 for v in tiles for z in lay.polygon(v))


def test_lattice_render_and_tree_refused():
    svg = render_cluster(Lattice(2), [(0, 0), (1, 0), (1, 1)])
    assert svg.count("<path") == 3
    with pytest.raises(GraphError):
        render_cluster(RegularTree(3), [()])
