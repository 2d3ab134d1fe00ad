"""Lazily materialized vertex-transitive graphs.

Three backends share one interface:

* ``Lattice``: Z^d with the standard (nearest-neighbour) or king-move
  generating set.  Vertices are integer tuples.
* ``RegularTree``: the d-regular tree, realized as the Cayley graph of the
  free product of d copies of Z/2.  Vertices are reduced words (tuples of
  letters with no letter repeated twice in a row); the root is ``()``.
* ``HyperbolicTiling``: the dual graph of the regular {p,q} tessellation of
  the hyperbolic plane.  Vertices are tiles, addressed as ``(layer, index)``
  in a concentric corona construction (see the class docstring).

Nothing is ever built globally: neighbours are computed from the vertex id
on demand and memoized.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Iterable, Sequence

Vertex = Hashable


class GraphError(ValueError):
    """Malformed vertex id or graph descriptor."""


@dataclass(frozen=True)
class RootedSubgraph:
    root: Vertex
    vertices: frozenset
    radius: int


class Graph:
    """Common machinery; subclasses provide ``neighbors`` and ``transport_map``."""

    kind = "abstract"
    degree: int
    base_vertex: Vertex

    def neighbors(self, v: Vertex) -> list:
        raise NotImplementedError

    def validate(self, v: Vertex) -> Vertex:
        raise NotImplementedError

    def descriptor(self) -> str:
        raise NotImplementedError

    def format_vertex(self, v: Vertex) -> str:
        raise NotImplementedError

    def parse_vertex(self, text: str) -> Vertex:
        raise NotImplementedError

    def sort_key(self, v: Vertex):
        return v

    def depth(self, v: Vertex) -> int:
        """Distance-like level of v used to order scans (exact distance to v0
        on lattices and trees, corona layer on tilings)."""
        raise NotImplementedError

    def stabilizer_maps(self, radius: int) -> list[dict]:
        """Automorphisms fixing v0, restricted to B_radius(v0)."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return self.descriptor()

    # -- metric helpers -------------------------------------------------

    def bfs_layers(self, sources: Iterable[Vertex], radius: int) -> list[list]:
        """Layers D_0..D_radius of the distance to ``sources``."""
        seen = set()
        layer = []
        for s in sources:
            if s not in seen:
                seen.add(s)
                layer.append(s)
        layers = [layer]
        for _ in range(radius):
            nxt = []
            for u in layer:
                for w in self.neighbors(u):
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            layers.append(nxt)
            layer = nxt
        return layers

    def distances(self, v: Vertex, radius: int) -> dict:
        out = {}
        for r, layer in enumerate(self.bfs_layers([self.validate(v)], radius)):
            for w in layer:
                out[w] = r
        return out

    def distance(self, u: Vertex, v: Vertex, cutoff: int = 64) -> int:
        """Graph distance by bidirectional-free BFS; raises past ``cutoff``."""
        u = self.validate(u)
        v = self.validate(v)
        if u == v:
            return 0
        seen = {u}
        layer = [u]
        for r in range(1, cutoff + 1):
            nxt = []
            for a in layer:
                for w in self.neighbors(a):
                    if w == v:
                        return r
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            layer = nxt
        raise GraphError(f"distance exceeds cutoff {cutoff}")

    # -- automorphisms --------------------------------------------------

    def transport_map(self, v: Vertex, radius: int) -> dict:
        """The fixed automorphism phi_v restricted to B_radius(v0)."""
        raise NotImplementedError

    def transport_points(self, v: Vertex, points: Sequence, radius: int) -> list:
        """phi_v applied to points of B_radius(v0); v is assumed valid."""
        phi = self.transport_map(v, radius)
        return [phi[w] for w in points]

    def transport(self, v: Vertex, s: RootedSubgraph) -> RootedSubgraph:
        v = self.validate(v)
        if s.root != self.base_vertex:
            raise GraphError("transport expects a subgraph rooted at the base vertex")
        phi = self.transport_map(v, s.radius)
        try:
            image = frozenset(phi[w] for w in s.vertices)
        except KeyError as exc:
            raise GraphError(f"vertex {exc.args[0]!r} lies outside B_{s.radius}(v0)") from None
        return RootedSubgraph(v, image, s.radius)


def neighbors(g: Graph, v: Vertex) -> list:
    """Validated neighbour list in the backend's fixed order."""
    return g.neighbors(g.validate(v))


def ball(g: Graph, v: Vertex, R: int) -> RootedSubgraph:
    if R < 0:
        raise GraphError("radius must be non-negative")
    layers = g.bfs_layers([g.validate(v)], R)
    return RootedSubgraph(v, frozenset(itertools.chain.from_iterable(layers)), R)


def sphere(g: Graph, v: Vertex, R: int) -> frozenset:
    if R < 0:
        raise GraphError("radius must be non-negative")
    return frozenset(g.bfs_layers([g.validate(v)], R)[R])


def growth_function(g: Graph, n: int) -> int:
    """N(n) = |B_n(v0)|."""
    return len(ball(g, g.base_vertex, n).vertices)


@dataclass(frozen=True)
class BallVolumeReport:
    radius: int
    volume: int
    bound: int

    @property
    def passed(self) -> bool:
        return self.volume <= self.bound


def ball_volume_bound_check(g: Graph, R: int) -> BallVolumeReport:
    """Compare |B_R(v0)| with d^(R+1)."""
    return BallVolumeReport(R, growth_function(g, R), g.degree ** (R + 1))


# ----------------------------------------------------------------------
# Lattices


class Lattice(Graph):
    kind = "lattice"

    def __init__(self, dim: int = 2, generators: str = "standard"):
        if dim < 1:
            raise GraphError("lattice dimension must be >= 1")
        self.dim = dim
        self.generators = generators
        if generators == "standard":
            gens = []
            for i in range(dim):
                for sign in (1, -1):
                    e = [0] * dim
                    e[i] = sign
                    gens.append(tuple(e))
        elif generators == "king":
            gens = [t for t in itertools.product((1, 0, -1), repeat=dim) if any(t)]
        else:
            raise GraphError(f"unknown generating set {generators!r}")
        self.gens = tuple(gens)
        self.degree = len(gens)
        self.base_vertex = (0,) * dim

    def descriptor(self) -> str:
        return f"lattice(d={self.dim},generators={self.generators})"

    def validate(self, v):
        if (
            not isinstance(v, tuple)
            or len(v) != self.dim
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in v)
        ):
            raise GraphError(f"{v!r} is not a vertex of Z^{self.dim}")
        return v

    def neighbors(self, v):
        if self.dim == 2:
            x, y = v
            return [(x + a, y + b) for a, b in self.gens]
        return [tuple(a + b for a, b in zip(v, g)) for g in self.gens]

    def transport_map(self, v, radius):
        v = self.validate(v)
        return {w: tuple(a + b for a, b in zip(w, v)) for w in ball(self, self.base_vertex, radius).vertices}

    def transport_points(self, v, points, radius):
        if self.dim == 2:
            a, b = v
            return [(x + a, y + b) for x, y in points]
        return [tuple(x + y for x, y in zip(w, v)) for w in points]

    def depth(self, v):
        if self.generators == "king":
            return max(abs(x) for x in v)
        return sum(abs(x) for x in v)

    def stabilizer_maps(self, radius):
        pts = ball(self, self.base_vertex, radius).vertices
        maps = []
        for perm in itertools.permutations(range(self.dim)):
            for signs in itertools.product((1, -1), repeat=self.dim):
                maps.append({w: tuple(signs[i] * w[perm[i]] for i in range(self.dim)) for w in pts})
        return maps

    def format_vertex(self, v):
        return ":".join(str(x) for x in v)

    def parse_vertex(self, text):
        try:
            return self.validate(tuple(int(x) for x in text.split(":")))
        except ValueError as exc:
            raise GraphError(f"cannot parse lattice vertex {text!r}") from exc


# ----------------------------------------------------------------------
# Regular trees


class RegularTree(Graph):
    """Cayley graph of Z/2 * ... * Z/2 (d factors).

    Left multiplication by the word v is the fixed automorphism taking the
    root to v.
    """

    kind = "tree"

    def __init__(self, degree: int = 3):
        if degree < 2:
            raise GraphError("tree degree must be >= 2")
        self.degree = degree
        self.base_vertex = ()

    def descriptor(self) -> str:
        return f"tree(degree={self.degree})"

    def validate(self, v):
        if not isinstance(v, tuple):
            raise GraphError(f"{v!r} is not a reduced word")
        prev = None
        for a in v:
            if not isinstance(a, int) or not 0 <= a < self.degree or a == prev:
                raise GraphError(f"{v!r} is not a reduced word over {self.degree} letters")
            prev = a
        return v

    def neighbors(self, v):
        last = v[-1] if v else -1
        return [v[:-1] if a == last else v + (a,) for a in range(self.degree)]

    def multiply(self, u, w):
        k = 0
        while k < len(u) and k < len(w) and u[len(u) - 1 - k] == w[k]:
            k += 1
        return u[: len(u) - k] + w[k:]

    def transport_map(self, v, radius):
        v = self.validate(v)
        return {w: self.multiply(v, w) for w in ball(self, self.base_vertex, radius).vertices}

    def sort_key(self, v):
        return (len(v), v)

    def transport_points(self, v, points, radius):
        return [self.multiply(v, w) for w in points]

    def depth(self, v):
        return len(v)

    def stabilizer_maps(self, radius):
        pts = ball(self, self.base_vertex, radius).vertices
        return [{w: tuple(perm[a] for a in w) for w in pts} for perm in itertools.permutations(range(self.degree))]

    def format_vertex(self, v):
        return ".".join(str(a) for a in v) if v else "e"

    def parse_vertex(self, text):
        if text == "e":
            return ()
        try:
            return self.validate(tuple(int(a) for a in text.split(".")))
        except ValueError as exc:
            raise GraphError(f"cannot parse tree vertex {text!r}") from exc

    def boundary_size(self, n: int) -> int:
        """Vertex boundary of any connected set of n vertices."""
        return (self.degree - 2) * n + 2


# ----------------------------------------------------------------------
# Hyperbolic {p,q} tilings

_ROOT = -1  # type tag of the central tile; other tiles are typed by run length


class HyperbolicTiling(Graph):
    """Edge-adjacency graph of the {p,q} tiling, built by vertex coronas.

    Layer 0 is a single tile.  Layer k+1 consists of all tiles sharing at
    least a corner with layer k that are not already placed; every layer is
    an annulus whose tiles are listed in counterclockwise ring order.  A
    tile of layer k >= 1 touches the previous layer along ``L`` consecutive
    edges (``L = 0`` for tiles meeting it in a single corner).  Each tile
    "owns" a contiguous run of children in the next layer, so index 0 of
    every layer is the first descendant of index 0 of the previous one.

    Edges of each tile are numbered counterclockwise: for a layer >= 1 tile
    with ``o = p - L - 2`` outer edges the order is
    ``[start radial, outer_0..outer_{o-1}, end radial, inner_{L-1}..inner_0]``;
    the central tile's edges are its outer edges 0..p-1.

    Corner incidence uses the rotation system: the corner at the end of edge
    e of tile T is met by rotating across edges until T is reached again.
    """

    kind = "hyperbolic"

    def __init__(self, p: int = 7, q: int = 3, cache_size: int = 1 << 18):
        if (p - 2) * (q - 2) <= 4:
            raise GraphError(f"{{{p},{q}}} is not hyperbolic")
        if p < 4:
            # triangle tilings produce tiles with no outer edge; unsupported
            raise GraphError("p >= 4 required")
        self.p = p
        self.q = q
        self.degree = p
        self.base_vertex = (0, 0)
        self._specs = {_ROOT: self._children_spec(_ROOT)}
        todo = [_ROOT]
        while todo:
            for _, _, L in self._specs[todo.pop()]:
                if L not in self._specs:
                    self._specs[L] = self._children_spec(L)
                    todo.append(L)
        last = {spec[-1][2] for t, spec in self._specs.items() if t != _ROOT}
        # the ring predecessor of a first child is always the last child of some tile
        assert len(last) == 1 and all(self._specs[t] for t in self._specs)
        self._last_child_type = last.pop()
        self._count = lru_cache(maxsize=None)(self._count_impl)
        self._darts = lru_cache(maxsize=cache_size)(self._darts_impl)

    def __getstate__(self):
        return {"p": self.p, "q": self.q}

    def __setstate__(self, state):
        self.__init__(state["p"], state["q"])

    def descriptor(self) -> str:
        return f"hyperbolic(p={self.p},q={self.q})"

    # -- corona combinatorics ------------------------------------------

    def _children_spec(self, t: int) -> list[tuple[str, int, int]]:
        """Children of a tile of type ``t`` as ``(kind, j, L)`` in ring order.

        ``kind`` is "E" for the tile crossing outer edge j and "V" for a tile
        meeting outer vertex j only.
        """
        p, q = self.p, self.q
        out = []
        if t == _ROOT:
            for j in range(p):
                out += [("V", j, 0)] * (q - 3)
                out.append(("E", j, 1))
            return out
        o = p - t - 2
        for j in range(o):
            tiles_inside = 2 if j == 0 else 1
            if q - tiles_inside < 2:
                continue  # pass-through corner: the crossing tile started earlier
            out += [("V", j, 0)] * (q - tiles_inside - 2)
            out.append(("E", j, 2 if (q == 3 and j == o - 1) else 1))
        return out

    def _count_impl(self, t: int, depth: int) -> int:
        if depth == 0:
            return 1
        return sum(self._count(L, depth - 1) for _, _, L in self._specs[t])

    def layer_size(self, k: int) -> int:
        return self._count(_ROOT, k)

    def outer_edges(self, t: int) -> int:
        return self.p if t == _ROOT else self.p - t - 2

    def _decode(self, k: int, i: int):
        """Locate tile (k, i) in the corona tree.

        Returns (type, parent index, position among parent's children,
        child descriptor, parent type, index of first child in layer k+1).
        """
        t = _ROOT
        start_prev = start = start_next = 0
        parent_t = None
        pos = desc = None
        for level in range(k):
            below = k - level - 1
            for c, d in enumerate(self._specs[t]):
                L = d[2]
                n = self._count(L, below)
                if i < start + n:
                    parent_t, pos, desc = t, c, d
                    t = L
                    break
                start += n
                start_next += self._count(L, below + 1)
                if below >= 1:
                    start_prev += self._count(L, below - 1)
            else:
                raise GraphError(f"tile ({k}, {i}) does not exist")
        return t, start_prev, pos, desc, parent_t, start_next

    def validate(self, v):
        if (
            not isinstance(v, tuple)
            or len(v) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in v)
            or v[0] < 0
            or not 0 <= v[1] < self.layer_size(v[0])
        ):
            raise GraphError(f"{v!r} is not a tile address (layer, index) of {self.descriptor()}")
        return v

    def tile_type(self, v) -> int:
        k, i = v
        return _ROOT if k == 0 else self._decode(k, i)[0]

    def _darts_impl(self, v) -> tuple:
        """((neighbour, back edge index), ...) in counterclockwise edge order."""
        p = self.p
        k, i = v
        if k == 0:
            out = []
            c = 0
            for kind, j, _ in self._specs[_ROOT]:
                if kind == "E":
                    out.append(((1, c), p - 1))
                c += 1
            return tuple(out)
        t, pi, pos, desc, parent_t, fc = self._decode(k, i)
        o = p - t - 2
        nk = self.layer_size(k)
        nk1 = self.layer_size(k + 1)
        siblings = self._specs[parent_t]
        if pos > 0:
            pred_t = siblings[pos - 1][2]
        elif k == 1:
            pred_t = siblings[-1][2]
        else:
            pred_t = self._last_child_type
        darts = [None] * p
        darts[0] = ((k, (i - 1) % nk), self.outer_edges(pred_t) + 1)
        darts[o + 1] = ((k, (i + 1) % nk), 0)
        crossing = {}
        for c, (kind, j, _) in enumerate(self._specs[t]):
            if kind == "E":
                crossing[j] = c
        for m in range(o):
            if m in crossing:
                darts[1 + m] = ((k + 1, fc + crossing[m]), p - 1)
            else:
                darts[1 + m] = ((k + 1, (fc - 1) % nk1), p - 2)
        if t >= 1:
            j = desc[1]
            darts[p - 1] = ((k - 1, pi), j if parent_t == _ROOT else 1 + j)
        if t == 2:
            darts[p - 2] = ((k - 1, (pi + 1) % self.layer_size(k - 1)), 1)
        return tuple(darts)

    def darts(self, v) -> tuple:
        return self._darts(v)

    def neighbors(self, v):
        return [w for w, _ in self._darts(v)]

    def corner(self, v, e: int) -> tuple:
        """Tiles around the corner at the end of edge e of v, starting at v."""
        tiles = [v]
        w, b = self._darts(v)[e]
        while w != v:
            tiles.append(w)
            w, b = self._darts(w)[(b - 1) % self.p]
        if len(tiles) != self.q:
            raise GraphError(f"corner of {v} closes after {len(tiles)} tiles, expected {self.q}")
        return tuple(tiles)

    def corners(self, v) -> list[tuple]:
        return [self.corner(v, e) for e in range(self.p)]

    def transport_map(self, v, radius, edge: int = 0):
        """Orientation-preserving automorphism with v0 -> v and edge 0 -> ``edge``."""
        v = self.validate(v)
        p = self.p
        frame = {self.base_vertex: (v, edge % p)}
        src_off = {self.base_vertex: 0}
        layer = [self.base_vertex]
        for _ in range(radius):
            nxt = []
            for x in layer:
                y, off = frame[x]
                a = src_off[x]
                dx = self._darts(x)
                dy = self._darts(y)
                for s in range(p):
                    x2, e2 = dx[(a + s) % p]
                    y2, f2 = dy[(off + s) % p]
                    if x2 in frame:
                        continue
                    frame[x2] = (y2, f2)
                    src_off[x2] = e2
                    nxt.append(x2)
            layer = nxt
        return {x: y for x, (y, _) in frame.items()}

    def depth(self, v):
        return v[0]

    def stabilizer_maps(self, radius):
        return [self.transport_map(self.base_vertex, radius, edge=r) for r in range(self.p)]

    def format_vertex(self, v):
        return f"{v[0]}:{v[1]}"

    def parse_vertex(self, text):
        try:
            k, i = (int(x) for x in text.split(":"))
        except ValueError as exc:
            raise GraphError(f"cannot parse tile address {text!r}") from exc
        return self.validate((k, i))


# ----------------------------------------------------------------------
# Descriptors

_DESC = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")


def parse_graph(text: str) -> Graph:
    """Build a graph from ``lattice(d=2, generators=king)``, ``tree(degree=3)``,
    ``hyperbolic(p=7, q=3)`` or the positional ``hyperbolic(7,3)``."""
    m = _DESC.match(text)
    if not m:
        raise GraphError(f"cannot parse graph descriptor {text!r}")
    name, body = m.group(1), m.group(2)
    args: list[str] = []
    kwargs: dict[str, str] = {}
    for part in filter(None, (s.strip() for s in body.split(","))):
        if "=" in part:
            key, val = (s.strip() for s in part.split("=", 1))
            kwargs[key] = val
        else:
            args.append(part)
    try:
        if name == "lattice":
            names = ["d", "generators"]
            vals = dict(zip(names, args)) | kwargs
            return Lattice(int(vals.get("d", 2)), vals.get("generators", "standard"))
        if name == "tree":
            vals = dict(zip(["degree"], args)) | kwargs
            return RegularTree(int(vals.get("degree", 3)))
        if name == "hyperbolic":
            vals = dict(zip(["p", "q"], args)) | kwargs
            return HyperbolicTiling(int(vals.get("p", 7)), int(vals.get("q", 3)))
    except (TypeError, ValueError) as exc:
        raise GraphError(f"bad graph descriptor {text!r}: {exc}") from exc
    raise GraphError(f"unknown graph kind {name!r}")


def induced_components(g: Graph, vertices: Sequence) -> int:
    """Number of connected components of the induced subgraph."""
    left = set(vertices)
    comps = 0
    while left:
        comps += 1
        todo = deque([left.pop()])
        while todo:
            u = todo.popleft()
            for w in g.neighbors(u):
                if w in left:
                    left.remove(w)
                    todo.append(w)
    return comps
