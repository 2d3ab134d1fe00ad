"""Counting disjoint R-balls in which the cluster looks like a fixed pattern.

A pattern S is a connected subset of B_R(v0) containing the whole sphere
D_R(v0).  A vertex v matches when B_R(v) intersected with the cluster is
exactly phi_v(S), the image of S under the fixed automorphism taking v0 to
v.  The greedy census scans candidate centers in a fixed order and keeps a
match whenever it is more than 2R away from every center kept so far.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graphs import Graph, GraphError, HyperbolicTiling, Lattice, RegularTree, RootedSubgraph, ball, induced_components, sphere


class PatternError(ValueError):
    def __init__(self, reason: str, message: str):
        super().__init__(f"{reason}: {message}")
        self.reason = reason


@dataclass(frozen=True)
class PatternSpec:
    graph: Graph
    subgraph: RootedSubgraph

    @property
    def radius(self) -> int:
        return self.subgraph.radius

    @property
    def vertices(self) -> frozenset:
        return self.subgraph.vertices


def validate_pattern(g: Graph, S: Iterable, R: int) -> PatternSpec:
    S = frozenset(g.validate(v) for v in S)
    if not S:
        raise PatternError("empty", "pattern has no vertices")
    if R < 0:
        raise PatternError("not-in-ball", "negative radius")
    B = ball(g, g.base_vertex, R).vertices
    outside = S - B
    if outside:
        raise PatternError("not-in-ball", f"{len(outside)} vertices farther than {R} from v0")
    missing = sphere(g, g.base_vertex, R) - S
    if missing:
        raise PatternError("missing-sphere", f"{len(missing)} vertices of D_{R}(v0) absent")
    if induced_components(g, S) != 1:
        raise PatternError("not-connected", "pattern is not connected")
    return PatternSpec(g, RootedSubgraph(g.base_vertex, S, R))


def ball_pattern(g: Graph, R: int) -> PatternSpec:
    return validate_pattern(g, ball(g, g.base_vertex, R).vertices, R)


def punctured_ball_pattern(g: Graph, R: int) -> PatternSpec:
    return validate_pattern(g, ball(g, g.base_vertex, R).vertices - {g.base_vertex}, R)


def load_pattern(g: Graph, text: str) -> PatternSpec:
    """``ball:R``, ``punctured-ball:R`` or a JSON file
    ``{"radius": R, "vertices": [...]}`` with ids relative to v0."""
    if text.startswith("ball:"):
        return ball_pattern(g, int(text.split(":", 1)[1]))
    if text.startswith("punctured-ball:"):
        return punctured_ball_pattern(g, int(text.split(":", 1)[1]))
    data = json.loads(Path(text).read_text())
    return validate_pattern(g, [g.parse_vertex(v) for v in data["vertices"]], int(data["radius"]))


def pattern_json(spec: PatternSpec) -> str:
    g = spec.graph
    verts = sorted(spec.vertices, key=g.sort_key)
    return json.dumps({"graph": g.descriptor(), "radius": spec.radius, "vertices": [g.format_vertex(v) for v in verts]})


class Matcher:
    """Precomputed membership template of B_R(v0) for fast matching."""

    def __init__(self, spec: PatternSpec, orbit: bool = False):
        g = spec.graph
        R = spec.radius
        self.spec = spec
        self.points = sorted(ball(g, g.base_vertex, R).vertices, key=g.sort_key)
        if orbit:
            masks = set()
            for m in g.stabilizer_maps(R):
                image = {m[w] for w in spec.vertices}
                masks.add(tuple(w in image for w in self.points))
            self.templates = sorted(masks)
        else:
            self.templates = [tuple(w in spec.vertices for w in self.points)]
        center = self.points.index(g.base_vertex)
        self.center_states = {t[center] for t in self.templates}
        self._center = center

    def __call__(self, infected, v) -> bool:
        if (v in infected) not in self.center_states:
            return False
        g = self.spec.graph
        image = g.transport_points(v, self.points, self.spec.radius)
        state = tuple(w in infected for w in image)
        return state in self.templates


def match_at(state, spec: PatternSpec, v, orbit: bool = False) -> bool:
    """B_R(v) intersected with A equals phi_v(S) as vertex sets."""
    v = spec.graph.validate(v)
    return Matcher(spec, orbit)(state.infected, v)


def candidate_centers(state, R: int) -> list:
    """Vertices within distance R of the cluster (the cluster included),
    ordered by (depth, canonical id)."""
    g = state.graph
    out = [v for layer in g.bfs_layers(state.order, R) for v in layer]
    out.sort(key=lambda v: (g.depth(v), g.sort_key(v)))
    return out


@dataclass
class CensusResult:
    centers: list
    cluster_size: int
    profile_value: float
    profile_tag: str
    radius: int

    @property
    def count(self) -> int:
        return len(self.centers)

    @property
    def ratio(self) -> float:
        return self.count / self.profile_value if self.profile_value else float("nan")


def greedy_census(state, spec: PatternSpec, orbit: bool = False) -> CensusResult:
    g = state.graph
    R = spec.radius
    match = Matcher(spec, orbit)
    infected = state.infected
    want_in = match.center_states
    blocked = set()
    centers = []
    for v in candidate_centers(state, R):
        if v in blocked or (v in infected) not in want_in:
            continue
        if match(infected, v):
            centers.append(v)
            for layer in g.bfs_layers([v], 2 * R):
                blocked.update(layer)
    value, tag = profile_proxy(g, len(state))
    return CensusResult(centers, len(state), value, tag, R)


def verify_census(state, spec: PatternSpec, result: CensusResult, orbit: bool = False) -> bool:
    """Post-hoc exact recheck of every match and of pairwise 2R-disjointness."""
    g = state.graph
    R = spec.radius
    match = Matcher(spec, orbit)
    if not all(match(state.infected, v) for v in result.centers):
        return False
    chosen = set(result.centers)
    for v in result.centers:
        near = {w for layer in g.bfs_layers([v], 2 * R) for w in layer}
        if (near & chosen) - {v}:
            return False
    return True


# ----------------------------------------------------------------------


@lru_cache(maxsize=None)
def _lattice_constant(descriptor: str) -> float:
    from .graphs import parse_graph
    from .isoperimetry import closed_form_profile

    g = parse_graph(descriptor)
    return closed_form_profile(g, 1).constant


def profile_proxy(g: Graph, n: int) -> tuple[float, str]:
    """Stand-in for F(n) at census scale, tagged with its provenance."""
    if isinstance(g, RegularTree):
        return float((g.degree - 2) * n + 2), "exact"
    if isinstance(g, Lattice):
        if g.dim == 1:
            return 2.0, "exact"
        c = _lattice_constant(g.descriptor())
        return c * n ** ((g.dim - 1) / g.dim), "fitted-power-law"
    if isinstance(g, HyperbolicTiling):
        return float(n), "linear-proxy"
    raise GraphError(f"no profile proxy for {g.descriptor()}")


@dataclass
class CensusTable:
    graph: str
    radius: int
    rows: list  # (size, trial, count, profile_value, ratio, verified)
    slope: float  # log-log slope of median count vs size
    tag: str

    def medians(self) -> dict:
        out = {}
        for n in sorted({r[0] for r in self.rows}):
            out[n] = float(np.median([r[2] for r in self.rows if r[0] == n]))
        return out

    @property
    def all_verified(self) -> bool:
        return all(r[5] for r in self.rows)


def census_trial(graph: Graph, spec_vertices: frozenset, R: int, seed: int, size: int, key: tuple, orbit: bool) -> tuple:
    from .growth import run_to_size

    spec = PatternSpec(graph, RootedSubgraph(graph.base_vertex, spec_vertices, R))
    state, _ = run_to_size(graph, seed, size, key=key)
    res = greedy_census(state, spec, orbit)
    ok = verify_census(state, spec, res, orbit)
    return (size, key[-1], res.count, res.profile_value, res.ratio, ok)


def census_scaling_experiment(
    g: Graph, spec: PatternSpec, sizes: Sequence[int], trials: int, seed: int, jobs: int = 1, orbit: bool = False
) -> CensusTable:
    from .parallel import map_trials

    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be increasing")
    tasks = [(g, spec.vertices, spec.radius, seed, n, (si, t), orbit) for si, n in enumerate(sizes) for t in range(trials)]
    rows = map_trials(census_trial, tasks, jobs)
    table = CensusTable(g.descriptor(), spec.radius, rows, math.nan, profile_proxy(g, 1)[1])
    med = table.medians()
    xs = [n for n in med if med[n] > 0]
    if len(xs) >= 2:
        table.slope = float(np.polyfit(np.log(xs), np.log([med[n] for n in xs]), 1)[0])
    return table
