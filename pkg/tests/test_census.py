from __future__ import annotations

import itertools
import json

import pytest

from edenlab.census import (
    Matcher,
    PatternError,
    ball_pattern,
    candidate_centers,
    greedy_census,
    load_pattern,
    match_at,
    pattern_json,
    profile_proxy,
    punctured_ball_pattern,
    validate_pattern,
    verify_census,
)
from edenlab.graphs import HyperbolicTiling, Lattice, RegularTree, ball, sphere
from edenlab.growth import ClusterState, run_to_size
from oracles import max_packing

Z2 = Lattice(2)


def planted(g, cells):
    """A ClusterState whose infected set is exactly ``cells`` (no dynamics)."""
    s = ClusterState(g, 0)
    cells = list(cells)
    s.infected = {v: (i, float(i)) for i, v in enumerate(cells)}
    s.order = cells
    return s


def test_full_ball_valid():
    assert validate_pattern(Z2, ball(Z2, (0, 0), 1).vertices, 1).radius == 1


def test_sphere_alone_not_connected():
    with pytest.raises(PatternError) as e:
        validate_pattern(Z2, sphere(Z2, (0, 0), 1), 1)
    assert e.value.reason == "not-connected"


def test_punctured_ball_valid():
    spec = punctured_ball_pattern(Z2, 2)
    assert len(spec.vertices) == 12 and (0, 0) not in spec.vertices


def test_pattern_errors():
    with pytest.raises(PatternError) as e:
        validate_pattern(Z2, [(0, 0), (3, 0)], 1)
    assert e.value.reason == "not-in-ball"
    with pytest.raises(PatternError) as e:
        validate_pattern(Z2, [(0, 0), (1, 0)], 1)
    assert e.value.reason == "missing-sphere"


def test_match_far_from_cluster_is_false():
    s = planted(Z2, ball(Z2, (0, 0), 1).vertices)
    assert not match_at(s, ball_pattern(Z2, 1), (10, 10))


def test_match_full_ball():
    s = planted(Z2, ball(Z2, (0, 0), 3).vertices)
    spec = ball_pattern(Z2, 1)
    assert match_at(s, spec, (1, 1)) and not match_at(s, spec, (3, 0))


def test_match_planted_five_cells():
    # the plus shape centred at (4, 2) equals the transported R=1 ball
    s = planted(Z2, ball(Z2, (4, 2), 1).vertices)
    spec = ball_pattern(Z2, 1)
    assert match_at(s, spec, (4, 2))
    assert [v for v in candidate_centers(s, 1) if match_at(s, spec, v)] == [(4, 2)]


def test_match_extra_cell_breaks():
    spec = punctured_ball_pattern(Z2, 2)
    assert match_at(planted(Z2, spec.vertices), spec, (0, 0))
    assert not match_at(planted(Z2, set(spec.vertices) | {(0, 0)}), spec, (0, 0))


def test_candidate_centers():
    assert len(candidate_centers(ClusterState(Z2, 1), 1)) == 5
    s = ClusterState(Z2, 1)
    assert candidate_centers(s, 0) == [(0, 0)]
    assert len(candidate_centers(ClusterState(RegularTree(3), 1), 2)) == 10


def test_candidate_order_deterministic():
    s, _ = run_to_size(Z2, 3, 200)
    c = candidate_centers(s, 2)
    assert c == sorted(c, key=lambda v: (abs(v[0]) + abs(v[1]), v))
    assert len(c) == len(set(c))


def test_census_empty_and_single():
    spec = punctured_ball_pattern(Z2, 2)
    assert greedy_census(planted(Z2, ball(Z2, (0, 0), 2).vertices), spec).count == 0
    s = planted(Z2, spec.vertices)
    r = greedy_census(s, spec)
    assert r.centers == [(0, 0)]


def test_two_planted_copies():
    spec = punctured_ball_pattern(Z2, 2)
    R = 2
    far = (2 * R + 2, 0)
    cells = set(spec.vertices) | {(x + far[0], y + far[1]) for x, y in spec.vertices}
    s = planted(Z2, cells)
    r = greedy_census(s, spec)
    assert r.count == 2 and verify_census(s, spec, r)
    matches = [v for v in candidate_centers(s, R) if match_at(s, spec, v)]
    assert max_packing(matches, lambda a, b: abs(a[0] - b[0]) + abs(a[1] - b[1]), R) == 2


@pytest.mark.parametrize("g,R", [(Z2, 1), (RegularTree(3), 1), (HyperbolicTiling(7, 3), 1)], ids=str)
def test_greedy_dominates_packing_bound(g, R):
    """greedy >= max packing / d^(2R+1) on small clusters (exhaustive oracle)."""
    spec = ball_pattern(g, R)
    for seed in range(3):
        s, _ = run_to_size(g, seed, 40)
        r = greedy_census(s, spec)
        assert verify_census(s, spec, r)
        matches = [v for v in candidate_centers(s, R) if match_at(s, spec, v)]
        if len(matches) > 16:
            continue
        best = max_packing(matches, g.distance, R)
        assert best / g.degree ** (2 * R + 1) <= r.count <= best


def test_census_pairwise_disjoint_and_deterministic():
    spec = punctured_ball_pattern(Z2, 2)
    s, _ = run_to_size(Z2, 17, 5000)
    r1 = greedy_census(s, spec)
    r2 = greedy_census(s, spec)
    assert r1.centers == r2.centers and r1.count > 0
    for a, b in itertools.combinations(r1.centers, 2):
        assert abs(a[0] - b[0]) + abs(a[1] - b[1]) > 4


def test_orbit_mode_accepts_rotations():
    g = HyperbolicTiling(7, 3)
    B = set(ball(g, g.base_vertex, 2).vertices)
    nb = g.neighbors(g.base_vertex)
    spec = validate_pattern(g, B - {nb[0]}, 2)
    rotated = planted(g, B - {nb[3]})
    assert not match_at(rotated, spec, g.base_vertex)
    assert match_at(rotated, spec, g.base_vertex, orbit=True)
    assert len(Matcher(spec, orbit=True).templates) == 7


def test_hyperbolic_ring_census():
    g = HyperbolicTiling(7, 3)
    spec = punctured_ball_pattern(g, 1)
    s = planted(g, spec.vertices)
    assert greedy_census(s, spec).centers == [g.base_vertex]


def test_pattern_file_roundtrip(tmp_path):
    spec = ball_pattern(RegularTree(3), 2)
    path = tmp_path / "p.json"
    path.write_text(pattern_json(spec))
    assert json.loads(path.read_text())["radius"] == 2
    assert load_pattern(RegularTree(3), str(path)).vertices == spec.vertices
    assert load_pattern(Z2, "ball:1").vertices == ball(Z2, (0, 0), 1).vertices


def test_profile_proxy_tags():
    assert profile_proxy(RegularTree(3), 10) == (12.0, "exact")
    assert profile_proxy(HyperbolicTiling(7, 3), 10)[1] == "linear-proxy"
    v, tag = profile_proxy(Z2, 100)
    assert tag == "fitted-power-law" and 20 < v < 60
