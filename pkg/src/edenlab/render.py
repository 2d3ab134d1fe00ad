"""Static SVG pictures of clusters.

Hyperbolic clusters are drawn in the Poincare disk.  Tile positions come
from Mobius transforms composed along the dart structure, so geometry
exists only here and never feeds back into the combinatorics.
"""

from __future__ import annotations

import cmath
import math
from collections import deque
from typing import Iterable

import numpy as np

from .graphs import Graph, GraphError, HyperbolicTiling, Lattice

Mobius = np.ndarray  # 2x2 complex, acting by z -> (a z + b) / (c z + d)


def _apply(m: Mobius, z: complex) -> complex:
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


def _rot(theta: float) -> Mobius:
    h = cmath.exp(0.5j * theta)
    return np.array([[h, 0], [0, 1 / h]], complex)


def _shift(a: complex) -> Mobius:
    """Disk automorphism taking 0 to a."""
    return np.array([[1, a], [np.conj(a), 1]], complex)


class DiskLayout:
    """Poincare-disk placement of the tiles of a {p,q} tiling."""

    def __init__(self, g: HyperbolicTiling):
        p, q = g.p, g.q
        self.g = g
        inradius = math.acosh(math.cos(math.pi / q) / math.sin(math.pi / p))
        circumradius = math.acosh(1 / (math.tan(math.pi / p) * math.tan(math.pi / q)))
        self.mid = math.tanh(inradius / 2)
        self.corner_r = math.tanh(circumradius / 2)
        m = self.mid
        # half-turn about the midpoint of edge 0
        self.half = _shift(m) @ _rot(math.pi) @ _shift(-m)
        self.frames = {g.base_vertex: np.eye(2, dtype=complex)}

    def frame(self, v) -> Mobius:
        return self.frames[v]

    def place(self, tiles: Iterable) -> None:
        """Compute frames for ``tiles`` by BFS over edges from already placed tiles."""
        want = set(tiles) - set(self.frames)
        if not want:
            return
        p = self.g.p
        queue = deque(sorted(self.frames, key=self.g.sort_key))
        seen = set(self.frames)
        limit = max(self.g.depth(v) for v in want)
        while want and queue:
            t = queue.popleft()
            gt = self.frames[t]
            for e, (u, b) in enumerate(self.g.darts(t)):
                if u in seen or self.g.depth(u) > limit:
                    continue
                gu = gt @ _rot(2 * math.pi * e / p) @ self.half @ _rot(-2 * math.pi * b / p)
                self.frames[u] = gu / np.sqrt(np.linalg.det(gu))
                seen.add(u)
                want.discard(u)
                queue.append(u)

    def polygon(self, v, samples: int = 6) -> list[complex]:
        """Boundary of tile v with geodesic edges sampled ``samples`` times."""
        p = self.g.p
        gv = self.frames[v]
        corners = [self.corner_r * cmath.exp(2j * math.pi * (k - 0.5) / p) for k in range(p)]
        pts = []
        for k in range(p):
            a, b = corners[k], corners[(k + 1) % p]
            to0 = _shift(-a)
            w = _apply(to0, b)
            back = _shift(a)
            for s in range(samples):
                pts.append(_apply(gv, _apply(back, w * s / samples)))
        return pts


def _svg(paths: list[tuple[str, str]], size: int, extra: str = "") -> str:
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">\n'
    body = "".join(f'<path d="{d}" {style}/>\n' for d, style in paths)
    return head + extra + body + "</svg>\n"


def render_hyperbolic(g: HyperbolicTiling, tiles: Iterable, size: int = 800, min_pixels: float = 0.5) -> str:
    tiles = sorted(set(tiles), key=g.sort_key)
    layout = DiskLayout(g)
    layout.place(tiles)
    c = size / 2
    scale = size / 2 - 2

    def xy(z: complex) -> str:
        return f"{c + scale * z.real:.2f},{c - scale * z.imag:.2f}"

    paths = []
    for v in tiles:
        poly = layout.polygon(v)
        extent = max(abs(a - b) for a in poly for b in poly[:1]) * scale
        if extent < min_pixels:
            continue
        d = "M" + " L".join(xy(z) for z in poly) + " Z"
        fill = "#c0392b" if v == g.base_vertex else "#2e86c1"
        paths.append((d, f'fill="{fill}" stroke="#111" stroke-width="0.3"'))
    disk = f'<circle cx="{c}" cy="{c}" r="{scale}" fill="#fdfdfd" stroke="#000" stroke-width="1"/>\n'
    return _svg(paths, size, disk)


def render_lattice(g: Lattice, cells: Iterable, size: int = 800) -> str:
    if g.dim != 2:
        raise GraphError("only 2-dimensional lattices can be rendered")
    cells = sorted(set(cells))
    xs = [x for x, _ in cells]
    ys = [y for _, y in cells]
    span = max(max(xs) - min(xs), max(ys) - min(ys)) + 1
    unit = (size - 4) / span
    paths = []
    for x, y in cells:
        px = 2 + (x - min(xs)) * unit
        py = 2 + (max(ys) - y) * unit
        fill = "#c0392b" if (x, y) == (0, 0) else "#2e86c1"
        paths.append((f"M{px:.2f},{py:.2f} h{unit:.2f} v{unit:.2f} h{-unit:.2f} Z", f'fill="{fill}"'))
    return _svg(paths, size)


def render_cluster(g: Graph, vertices: Iterable, size: int = 800) -> str:
    if isinstance(g, HyperbolicTiling):
        return render_hyperbolic(g, vertices, size)
    if isinstance(g, Lattice):
        return render_lattice(g, vertices, size)
    raise GraphError(f"no renderer for {g.descriptor()}")
