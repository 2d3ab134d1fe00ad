"""Isoperimetric profiles F(n) = min{|boundary A| : |A| >= n}.

Exact tables come from Redelmeier-style enumeration of connected vertex
sets.  On lattices each translation class is visited once (the set's
lexicographically smallest vertex is pinned at the origin); on other
backends every connected set through the base vertex is visited.

Tables are ``connected-restricted``: the minimum runs over connected sets
of size n..n_max only.  ``window_profile`` gives the unrestricted minimum
over all subsets of a finite window, for cross-checking small n.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graphs import Graph, HyperbolicTiling, Lattice, RegularTree, ball, growth_function

# refusal thresholds for exact enumeration
N_MAX_CAP = {"lattice": 13, "lattice-king": 11, "tree": 22, "hyperbolic": 9}


class ProfileError(RuntimeError):
    pass


@dataclass
class ProfileTable:
    graph: str
    n_max: int
    values: dict  # n -> F(n)
    witnesses: dict  # n -> frozenset attaining F(n)
    exact_size: dict = field(default_factory=dict)  # m -> min boundary over |A| = m
    mode: str = "connected-restricted"
    sets_visited: int = 0

    def __getitem__(self, n: int) -> int:
        return self.values[n]

    def as_list(self) -> list[int]:
        return [self.values[n] for n in range(1, self.n_max + 1)]


def vertex_boundary(g: Graph, A) -> set:
    A = set(A)
    return {w for v in A for w in g.neighbors(v) if w not in A}


def _cap_key(g: Graph) -> str:
    if isinstance(g, Lattice) and g.generators == "king":
        return "lattice-king"
    return g.kind


def _enumerate(nbrs, root, allowed, n_max: int):
    """Min boundary per exact size over connected sets containing ``root``
    whose other members satisfy ``allowed``.  Vertices must be hashable."""
    best = [sys.maxsize] * (n_max + 1)
    wit = [None] * (n_max + 1)
    inA = set()
    cnt: dict = {}
    seen = {root}
    state = {"b": 0, "visited": 0}
    members: list = []

    def add(v):
        b = state["b"]
        if cnt.get(v, 0) > 0:
            b -= 1
        inA.add(v)
        members.append(v)
        for w in nbrs(v):
            if w not in inA:
                c = cnt.get(w, 0) + 1
                cnt[w] = c
                if c == 1:
                    b += 1
        state["b"] = b

    def remove(v):
        b = state["b"]
        inA.discard(v)
        members.pop()
        for w in nbrs(v):
            if w not in inA:
                c = cnt[w] - 1
                cnt[w] = c
                if c == 0:
                    b -= 1
        if cnt.get(v, 0) > 0:
            b += 1
        state["b"] = b

    def rec(untried: list, size: int):
        while untried:
            v = untried.pop()
            add(v)
            state["visited"] += 1
            s = size + 1
            if state["b"] < best[s]:
                best[s] = state["b"]
                wit[s] = tuple(members)
            if s < n_max:
                new = [w for w in nbrs(v) if w not in seen and allowed(w)]
                seen.update(new)
                rec(untried + new, s)
                seen.difference_update(new)
            remove(v)

    rec([root], 0)
    return best, wit, state["visited"]


def exact_connected_profile(g: Graph, n_max: int) -> ProfileTable:
    if n_max < 1:
        raise ProfileError("n_max must be >= 1")
    cap = N_MAX_CAP[_cap_key(g)]
    if n_max > cap:
        raise ProfileError(f"n_max={n_max} exceeds the enumeration cap {cap} for {g.descriptor()}")
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 10 * n_max + 1000))
    if isinstance(g, Lattice):
        # integer encoding, row-major so that integer order is lexicographic
        W = 2 * n_max + 3
        off = n_max + 1
        dim = g.dim
        strides = [W**i for i in reversed(range(dim))]
        deltas = [sum(c * s for c, s in zip(gen, strides)) for gen in g.gens]
        origin = sum(off * s for s in strides)

        def nbrs(x):
            return [x + d for d in deltas]

        def decode(x):
            out = []
            for s in strides:
                out.append(x // s - off)
                x %= s
            return tuple(out)

        best, wit, visited = _enumerate(nbrs, origin, lambda x: x > origin, n_max)
        wit = [None if w is None else frozenset(decode(x) for x in w) for w in wit]
    else:
        best, wit, visited = _enumerate(g.neighbors, g.base_vertex, lambda x: True, n_max)
        wit = [None if w is None else frozenset(w) for w in wit]
    values, witnesses = {}, {}
    run, run_w = sys.maxsize, None
    for m in range(n_max, 0, -1):
        if best[m] < run:
            run, run_w = best[m], wit[m]
        values[m] = run
        witnesses[m] = run_w
    return ProfileTable(
        g.descriptor(),
        n_max,
        dict(sorted(values.items())),
        dict(sorted(witnesses.items())),
        {m: best[m] for m in range(1, n_max + 1)},
        "connected-restricted",
        visited,
    )


def window_profile(g: Graph, window: Sequence, n_max: int) -> ProfileTable:
    """F over every subset of ``window`` (connected or not), |A| >= n."""
    window = list(window)
    k = len(window)
    if k > 22:
        raise ProfileError("window too large for exhaustive subset enumeration")
    idx = {v: i for i, v in enumerate(window)}
    outside: dict = {}
    nb = []
    for v in window:
        m = 0
        for w in g.neighbors(v):
            if w in idx:
                m |= 1 << idx[w]
            else:
                m |= 1 << (k + outside.setdefault(w, len(outside)))
        nb.append(m)
    full = 1 << k
    N = [0] * full
    best = [sys.maxsize] * (k + 1)
    wit = [0] * (k + 1)
    for S in range(1, full):
        low = S & -S
        N[S] = N[S ^ low] | nb[low.bit_length() - 1]
        b = (N[S] & ~S).bit_count()
        size = S.bit_count()
        if b < best[size]:
            best[size] = b
            wit[size] = S
    values, witnesses = {}, {}
    run, run_w = sys.maxsize, 0
    for m in range(k, 0, -1):
        if best[m] < run:
            run, run_w = best[m], wit[m]
        if m <= n_max:
            values[m] = run
            witnesses[m] = frozenset(window[i] for i in range(k) if run_w >> i & 1)
    return ProfileTable(
        g.descriptor(),
        n_max,
        dict(sorted(values.items())),
        dict(sorted(witnesses.items())),
        {m: best[m] for m in range(1, k + 1)},
        f"exhaustive-window({k})",
        full - 1,
    )


def square_window(side: int, dim: int = 2) -> list:
    import itertools

    return sorted(itertools.product(range(side), repeat=dim))


# ----------------------------------------------------------------------


@dataclass
class ClosedForm:
    tag: str
    value: float | None
    exponent: float | None = None
    constant: float | None = None
    residuals: list | None = None


def closed_form_profile(g: Graph, n: int, table: ProfileTable | None = None) -> ClosedForm:
    if isinstance(g, RegularTree):
        return ClosedForm("exact: (d-2)n+2", (g.degree - 2) * n + 2, 1.0, g.degree - 2)
    if isinstance(g, HyperbolicTiling):
        return ClosedForm("linear (non-amenable)", None, 1.0, None)
    if isinstance(g, Lattice):
        if g.dim == 1 and g.generators == "standard":
            return ClosedForm("exact: interval", 2, 0.0, 2.0)
        expo = (g.dim - 1) / g.dim
        table = table or exact_connected_profile(g, min(10, N_MAX_CAP[_cap_key(g)]))
        ns = np.arange(1, table.n_max + 1, dtype=float)
        fs = np.array(table.as_list(), float)
        # least squares for log F = log c + expo log n with the exponent fixed
        logc = float(np.mean(np.log(fs) - expo * np.log(ns)))
        c = math.exp(logc)
        res = (np.log(fs) - logc - expo * np.log(ns)).tolist()
        return ClosedForm(f"asymptotic: c*n^{expo:g}", c * n**expo, expo, c, res)
    raise ProfileError(f"no closed form for {g.descriptor()}")


@dataclass
class SubadditivityReport:
    pairs_checked: int
    multiples_checked: int
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations


def subadditivity_check(table: ProfileTable) -> SubadditivityReport:
    """F(m+n) <= F(m) + F(n) and F(kn) <= k F(n) over the tabulated range."""
    F = table.values
    N = table.n_max
    bad = []
    pairs = mult = 0
    for m in range(1, N + 1):
        for n in range(m, N + 1 - m):
            pairs += 1
            if F[m + n] > F[m] + F[n]:
                bad.append(("pair", m, n))
    for n in range(1, N + 1):
        for k in range(2, N // n + 1):
            mult += 1
            if F[k * n] > k * F[n]:
                bad.append(("multiple", k, n))
    rep = SubadditivityReport(pairs, mult, bad)
    if bad:
        raise ProfileError(f"subadditivity violated at {bad}")
    return rep


# ----------------------------------------------------------------------
# quasi-isometry comparison


@dataclass
class QIReport:
    graph_a: str
    graph_b: str
    C: float
    K: int
    n_max: int
    profile_a: list
    profile_b: list
    max_ratio_ab: float  # max F_a / F_b
    max_ratio_ba: float
    bound_ab: int  # constructive bound on F_a / F_b
    bound_ba: int
    size_lemma_ok: bool

    @property
    def passed(self) -> bool:
        return self.max_ratio_ab <= self.bound_ab and self.max_ratio_ba <= self.bound_ba and self.size_lemma_ok


def identity_qi_constants(ga: Graph, gb: Graph) -> tuple[int, int]:
    """(C, K) for the identity map between two Cayley graphs of Z^d."""
    if ga.descriptor() == gb.descriptor():
        return 1, 0
    if isinstance(ga, Lattice) and isinstance(gb, Lattice) and ga.dim == gb.dim:
        # L-infinity <= L1 <= d * L-infinity
        return ga.dim, 0
    raise ProfileError(f"no built-in quasi-isometry between {ga.descriptor()} and {gb.descriptor()}")


def _check_qi(ga: Graph, gb: Graph, C: float, K: int, radius: int) -> bool:
    da = ga.distances(ga.base_vertex, radius)
    db = gb.distances(gb.base_vertex, radius * int(math.ceil(C)) + K)
    return all(d / C - K <= db[w] <= C * d + K for w, d in da.items())


def qi_constant(gt: Graph, gw: Graph, C: float, K: int) -> int:
    """N_T(CK) * N_W(K) * deg(T)^(C(3K+1)): bound on F_W / F_T."""
    return growth_function(gt, int(C * K)) * growth_function(gw, K) * gt.degree ** int(math.ceil(C * (3 * K + 1)))


def qi_compare(
    ga: Graph, gb: Graph, n_max: int, mapping: str = "identity", C: float | None = None, K: int | None = None,
    samples: int = 200, seed: int = 0,
) -> QIReport:
    if mapping != "identity":
        raise ProfileError(f"unknown map {mapping!r}")
    c0, k0 = identity_qi_constants(ga, gb)
    C = c0 if C is None else C
    K = k0 if K is None else K
    if not (_check_qi(ga, gb, C, K, 4) and _check_qi(gb, ga, C, K, 4)):
        raise ProfileError(f"identity is not a ({C},{K}) quasi-isometry")
    fa = exact_connected_profile(ga, n_max)
    fb = exact_connected_profile(gb, n_max) if gb.descriptor() != ga.descriptor() else fa
    ab = max(fa[n] / fb[n] for n in range(1, n_max + 1))
    ba = max(fb[n] / fa[n] for n in range(1, n_max + 1))
    # size lemma |S|/N_T(CK) <= |f(S)| <= |S| on random finite sets
    rng = np.random.default_rng(seed)
    pool = sorted(ball(ga, ga.base_vertex, 4).vertices, key=ga.sort_key)
    lemma_ok = True
    n_ck = growth_function(ga, int(C * K))
    for _ in range(samples):
        size = int(rng.integers(1, len(pool) + 1))
        S = {pool[i] for i in rng.choice(len(pool), size, replace=False)}
        image = set(S)  # identity map
        lemma_ok &= size / n_ck <= len(image) <= size
    return QIReport(
        ga.descriptor(), gb.descriptor(), C, K, n_max, fa.as_list(), fb.as_list(), ab, ba,
        qi_constant(gb, ga, C, K), qi_constant(ga, gb, C, K), lemma_ok,
    )
