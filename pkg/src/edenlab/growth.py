"""Eden growth / exponential site first-passage percolation.

The default engine runs the Eden chain (one uniformly random boundary vertex
per step) and attaches FPP time by adding an Exp(rate = |boundary|)
increment before every step, the minimum of |boundary| independent Exp(1)
clocks.  ``priority_queue_fpp`` is the literal per-site clock simulation and
exists as an oracle for that equivalence.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graphs import Graph

TRACE_HEADER = ("step", "vertex", "fpp_time", "boundary_size", "cluster_size")


class TieError(RuntimeError):
    """Two infections landed on the same floating-point time."""


class TraceTooShort(ValueError):
    pass


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream for (master seed, key...)."""
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(key))))


class Stream:
    """Buffered uniform and Exp(1) draws from one generator.

    Buffers start small and double up to ``block`` so that short runs do
    not pay for thousands of unused draws.
    """

    def __init__(self, rng: np.random.Generator, block: int = 4096, first: int = 16):
        self.rng = rng
        self.block = block
        self._nu = self._ne = first
        self._u = self._e = ()
        self._iu = self._ie = 0

    def uniform(self) -> float:
        if self._iu == len(self._u):
            self._u = self.rng.random(self._nu).tolist()
            self._nu = min(2 * self._nu, self.block)
            self._iu = 0
        x = self._u[self._iu]
        self._iu += 1
        return x

    def exponential(self) -> float:
        if self._ie == len(self._e):
            self._e = self.rng.standard_exponential(self._ne).tolist()
            self._ne = min(2 * self._ne, self.block)
            self._ie = 0
        x = self._e[self._ie]
        self._ie += 1
        return x


class IndexedSet:
    """Array-backed set: O(1) insert, swap-remove and uniform pick."""

    __slots__ = ("items", "pos")

    def __init__(self, items: Sequence = ()):
        self.items = []
        self.pos = {}
        for x in items:
            self.add(x)

    def add(self, x) -> bool:
        if x in self.pos:
            return False
        self.pos[x] = len(self.items)
        self.items.append(x)
        return True

    def remove(self, x) -> None:
        i = self.pos.pop(x)
        last = self.items.pop()
        if i < len(self.items):
            self.items[i] = last
            self.pos[last] = i

    def __contains__(self, x) -> bool:
        return x in self.pos

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


@dataclass
class Trace:
    """One row per Eden step (the seed infection at step 0 is not a row)."""

    step: list = field(default_factory=list)
    vertex: list = field(default_factory=list)
    fpp_time: list = field(default_factory=list)
    boundary_size: list = field(default_factory=list)
    cluster_size: list = field(default_factory=list)
    truncated: bool = False
    t_end: float | None = None

    def __len__(self) -> int:
        return len(self.step)

    def append(self, step, v, t, b, n) -> None:
        self.step.append(step)
        self.vertex.append(v)
        self.fpp_time.append(t)
        self.boundary_size.append(b)
        self.cluster_size.append(n)

    def size_at(self, t: float) -> int:
        """|A(t)| read off the trace."""
        return 1 + int(np.searchsorted(self.fpp_time, t, side="right"))

    def boundary_at(self, t: float, initial: int) -> int:
        k = int(np.searchsorted(self.fpp_time, t, side="right"))
        return initial if k == 0 else self.boundary_size[k - 1]

    def to_csv(self, graph: Graph) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        fmt = graph.format_vertex
        for row in zip(self.step, self.vertex, self.fpp_time, self.boundary_size, self.cluster_size):
            w.writerow((row[0], fmt(row[1]), repr(row[2]), row[3], row[4]))
        return buf.getvalue()


def read_trace_csv(text: str, graph: Graph) -> Trace:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != TRACE_HEADER:
        raise ValueError(f"trace header must be {','.join(TRACE_HEADER)}")
    tr = Trace()
    for r in rows[1:]:
        tr.append(int(r[0]), graph.parse_vertex(r[1]), float(r[2]), int(r[3]), int(r[4]))
    return tr


class ClusterState:
    """The infected set A, its vertex boundary and the FPP clock."""

    def __init__(self, graph: Graph, seed: int, key: tuple = ()):
        self.graph = graph
        self.seed = seed
        self.key = tuple(key)
        self.stream = Stream(trial_rng(seed, *key))
        v0 = graph.base_vertex
        self.infected = {v0: (0, 0.0)}
        self.order = [v0]
        self.boundary = IndexedSet(graph.neighbors(v0))
        self.step_count = 0
        self.fpp_clock = 0.0

    def __len__(self) -> int:
        return len(self.infected)

    def recompute_boundary(self) -> set:
        nbrs = self.graph.neighbors
        inf = self.infected
        return {w for v in inf for w in nbrs(v) if w not in inf}

    def snapshot(self) -> dict:
        fmt = self.graph.format_vertex
        return {
            "graph": self.graph.descriptor(),
            "seed": self.seed,
            "key": list(self.key),
            "step_count": self.step_count,
            "fpp_clock": self.fpp_clock,
            "infected": [
                {"vertex": fmt(v), "step": self.infected[v][0], "fpp_time": self.infected[v][1]}
                for v in self.order
            ],
        }

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot(), indent=1)


def init(graph: Graph, seed: int, key: tuple = ()) -> ClusterState:
    return ClusterState(graph, seed, key)


def fpp_time_increment(boundary_size: int, stream: Stream) -> float:
    """Exp(rate = boundary_size) sample."""
    if boundary_size < 1:
        raise ValueError("boundary is empty")
    return stream.exponential() / boundary_size


def eden_step(state: ClusterState) -> object:
    """Infect one uniformly chosen boundary vertex; returns it."""
    b = state.boundary
    nb = len(b)
    dt = fpp_time_increment(nb, state.stream)
    t = state.fpp_clock + dt
    if t == state.fpp_clock:
        raise TieError(f"FPP clock did not advance at step {state.step_count + 1}")
    v = b.items[int(state.stream.uniform() * nb)]
    _infect(state, v, t)
    return v


def _infect(state: ClusterState, v, t: float) -> None:
    b = state.boundary
    b.remove(v)
    state.step_count += 1
    state.fpp_clock = t
    state.infected[v] = (state.step_count, t)
    state.order.append(v)
    inf = state.infected
    for w in state.graph.neighbors(v):
        if w not in inf:
            b.add(w)


def _grow(state: ClusterState, trace: Trace, max_size: int | None, t_max: float | None) -> None:
    stream = state.stream
    b = state.boundary
    items = b.items
    pos = b.pos
    inf = state.infected
    order = state.order
    nbrs = state.graph.neighbors
    clock = state.fpp_clock
    step = state.step_count
    exp = stream.exponential
    unif = stream.uniform
    t_rows, v_rows, f_rows, b_rows, n_rows = trace.step, trace.vertex, trace.fpp_time, trace.boundary_size, trace.cluster_size
    try:
        while True:
            if max_size is not None and step + 1 >= max_size:
                break
            nb = len(items)
            t = clock + exp() / nb
            if t_max is not None and t > t_max:
                break
            if t == clock:
                raise TieError(f"FPP clock did not advance at step {step + 1}")
            i = int(unif() * nb)
            v = items[i]
            last = items.pop()
            del pos[v]
            if i < len(items):
                items[i] = last
                pos[last] = i
            step += 1
            clock = t
            inf[v] = (step, t)
            order.append(v)
            for w in nbrs(v):
                if w not in inf and w not in pos:
                    pos[w] = len(items)
                    items.append(w)
            t_rows.append(step)
            v_rows.append(v)
            f_rows.append(t)
            b_rows.append(len(items))
            n_rows.append(step + 1)
    finally:
        state.fpp_clock = clock
        state.step_count = step


def run_to_size(graph: Graph, seed: int, n: int, key: tuple = ()) -> tuple[ClusterState, Trace]:
    if n < 1:
        raise ValueError("target size must be >= 1")
    state = ClusterState(graph, seed, key)
    trace = Trace()
    _grow(state, trace, n, None)
    return state, trace


def run_to_fpp_time(
    graph: Graph, seed: int, t: float, key: tuple = (), max_size: int | None = 10**7
) -> tuple[ClusterState, Trace]:
    """Grow until the next infection would happen after time t.

    Stops early with ``trace.truncated`` set if the cluster reaches
    ``max_size``.
    """
    if t < 0:
        raise ValueError("time must be >= 0")
    state = ClusterState(graph, seed, key)
    trace = Trace(t_end=t)
    _grow(state, trace, max_size, t)
    if max_size is not None and len(state) >= max_size:
        trace.truncated = True
        trace.t_end = state.fpp_clock
    return state, trace


def priority_queue_fpp(graph: Graph, rng: np.random.Generator, n: int) -> list:
    """Literal site FPP: each site gets an Exp(1) passage time that starts
    running when its first neighbour is infected.  Returns the first n
    infected vertices in order."""
    v0 = graph.base_vertex
    infected = {v0}
    order = [v0]
    scheduled = set()
    heap = []
    for w in graph.neighbors(v0):
        scheduled.add(w)
        heapq.heappush(heap, (rng.standard_exponential(), graph.sort_key(w), w))
    while len(order) < n:
        t, _, v = heapq.heappop(heap)
        if heap and heap[0][0] == t:
            raise TieError("simultaneous infections")
        infected.add(v)
        order.append(v)
        for w in graph.neighbors(v):
            if w not in infected and w not in scheduled:
                scheduled.add(w)
                heapq.heappush(heap, (t + rng.standard_exponential(), graph.sort_key(w), w))
    return order


# ----------------------------------------------------------------------
# growth control over a window of length epsilon


def growth_epsilon(degree: int) -> float:
    """epsilon with P(Exp(1) < epsilon) = 1/(degree+1)."""
    return math.log((degree + 1) / degree)


@dataclass
class GrowthRatioReport:
    epsilon: float
    times: list
    event_frequency: list
    median_ratio: list  # |A(t)| / |A(t-2)|
    trials: int


def growth_ratio_check(traces: Sequence[Trace], times: Sequence[float], degree: int) -> GrowthRatioReport:
    """Frequency of |A(t+eps)| <= |A(t)| + |boundary A(t)| over the traces."""
    eps = growth_epsilon(degree)
    freq, ratio = [], []
    for t in times:
        hits = 0
        ratios = []
        for tr in traces:
            if tr.t_end is None or tr.t_end < t + eps:
                raise TraceTooShort(f"trace ends at {tr.t_end}, need {t + eps}")
            a = tr.size_at(t)
            da = tr.boundary_at(t, degree)
            hits += tr.size_at(t + eps) <= a + da
            ratios.append(a / tr.size_at(max(t - 2.0, 0.0)))
        freq.append(hits / len(traces))
        ratio.append(float(np.median(ratios)))
    return GrowthRatioReport(eps, list(times), freq, ratio, len(traces))


def growth_control_experiment(graph: Graph, times: Sequence[float], trials: int, seed: int) -> GrowthRatioReport:
    t_end = max(times) + growth_epsilon(graph.degree)
    traces = [run_to_fpp_time(graph, seed, t_end, key=(i,))[1] for i in range(trials)]
    return growth_ratio_check(traces, times, graph.degree)


# ----------------------------------------------------------------------
# Eden chain versus literal site FPP


@dataclass
class EquivalenceTable:
    shapes: list  # canonical shape strings
    eden: list  # counts from the Eden engine
    fpp: list  # counts from the priority-queue oracle
    chi2: float
    dof: int
    p_value: float


def equivalence_experiment(graph: Graph, steps: int, trials: int, seed: int) -> EquivalenceTable:
    """Compare the law of A after ``steps`` Eden steps with per-site clocks.

    Engine trial i uses stream key (0, i); the oracle draws from key (1,).
    Shapes with expected count below 5 are pooled into one cell.
    """
    from scipy.stats import chi2_contingency

    fmt = graph.format_vertex
    key_of = lambda cells: " ".join(sorted(fmt(v) for v in cells))  # noqa: E731
    eden: dict = {}
    for i in range(trials):
        state, _ = run_to_size(graph, seed, steps + 1, key=(0, i))
        k = key_of(state.order)
        eden[k] = eden.get(k, 0) + 1
    rng = trial_rng(seed, 1)
    fpp: dict = {}
    for _ in range(trials):
        k = key_of(priority_queue_fpp(graph, rng, steps + 1))
        fpp[k] = fpp.get(k, 0) + 1
    shapes = sorted(set(eden) | set(fpp))
    a = np.array([eden.get(s, 0) for s in shapes], float)
    b = np.array([fpp.get(s, 0) for s in shapes], float)
    small = (a + b) / 2 < 5
    if small.any():
        a = np.append(a[~small], a[small].sum())
        b = np.append(b[~small], b[small].sum())
    res = chi2_contingency(np.vstack([a, b]))
    return EquivalenceTable(
        shapes, [eden.get(s, 0) for s in shapes], [fpp.get(s, 0) for s in shapes], float(res[0]), int(res[2]), float(res[1])
    )
