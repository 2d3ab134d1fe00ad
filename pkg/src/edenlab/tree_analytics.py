"""Expected cluster size versus FPP time on regular trees.

g(t) = E|A(t)| on the tree where every vertex has degree n solves

    g(t) = 2 - e^{-t} + (n-1) * int_0^t e^{-s} g(t-s) ds.

Multiplying by e^t and differentiating turns this into g' = (n-2) g + 2
with g(0) = 1, so g(t) = n/(n-2) e^{(n-2)t} - 2/(n-2).  The quadrature
solver works on the integral equation directly; the closed form is only
used as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graphs import Graph, RegularTree
from .growth import growth_epsilon, run_to_fpp_time, trial_rng


@dataclass
class ExpectationCurve:
    degree: int
    grid: np.ndarray
    values: np.ndarray
    method: str

    def at(self, t: float) -> float:
        return float(np.interp(t, self.grid, self.values))


def expected_size_quadrature(n: int, t_max: float, dt: float = 1e-3) -> ExpectationCurve:
    """Trapezoidal stepping on the convolution integral."""
    if n < 3:
        raise ValueError("degree must be >= 3")
    steps = int(round(t_max / dt))
    if steps < 1 or not math.isclose(steps * dt, t_max, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"dt={dt} does not divide t_max={t_max}")
    if (n - 1) * dt / 2 >= 1:
        raise ValueError(f"dt={dt} too coarse for degree {n}")
    grid = np.arange(steps + 1) * dt
    kernel = np.exp(-grid)
    g = np.empty(steps + 1)
    g[0] = 1.0
    diag = 1.0 - (n - 1) * dt / 2
    for i in range(1, steps + 1):
        # sum_{j=1}^{i-1} e^{-s_j} g(t_i - s_j) + e^{-t_i} g(0) / 2
        inner = kernel[1:i] @ g[i - 1 : 0 : -1] + 0.5 * kernel[i] * g[0]
        g[i] = (2.0 - kernel[i] + (n - 1) * dt * inner) / diag
    return ExpectationCurve(n, grid, g, "quadrature")


def expected_size_ode(n: int, grid: np.ndarray) -> ExpectationCurve:
    grid = np.asarray(grid, float)
    vals = n / (n - 2) * np.exp((n - 2) * grid) - 2 / (n - 2)
    return ExpectationCurve(n, grid, vals, "ode")


@dataclass
class MCEstimate:
    mean: float
    stderr: float
    trials: int


def expected_size_mc(n: int, t: float, trials: int, seed: int, key: tuple = ()) -> MCEstimate:
    """Mean |A(t)| from the growth engine on the degree-n tree."""
    g = RegularTree(n)
    sizes = np.array([len(run_to_fpp_time(g, seed, t, key=key + (i,))[0]) for i in range(trials)], float)
    return MCEstimate(float(sizes.mean()), float(sizes.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0, trials)


@dataclass
class ExponentialBoundReport:
    degree: int
    constant: float
    t_max: float
    holds: bool
    worst_ratio: float  # max g(t) / (C e^{(n-1)t}) on the grid
    log_slope: float  # fitted d log g / dt on the tail


def exponential_bound_check(n: int, t_max: float, dt: float = 1e-3) -> ExponentialBoundReport:
    """E|A(t)| < C e^{(n-1)t}, with C chosen so the bound holds on [0, n]."""
    curve = expected_size_quadrature(n, max(t_max, float(n)), dt)
    t, g = curve.grid, curve.values
    head = t <= n
    c = float(np.max(g[head] * np.exp(-(n - 1) * t[head])))
    c = math.nextafter(c, math.inf) * (1 + 1e-12)
    mask = t <= t_max
    ratio = g[mask] / (c * np.exp((n - 1) * t[mask]))
    tail = mask & (t >= t_max / 2)
    slope = float(np.polyfit(t[tail], np.log(g[tail]), 1)[0])
    rep = ExponentialBoundReport(n, c, t_max, bool(np.all(ratio < 1)), float(ratio.max()), slope)
    if not rep.holds:
        raise AssertionError(f"exponential bound violated: {rep}")
    return rep


# ----------------------------------------------------------------------
# growth rate |A(t)| <= D^t


def tree_size_path(degree: int, seed: int, t_max: float, key: tuple = (), max_size: int = 10**8) -> np.ndarray:
    """Infection times of the 2nd, 3rd, ... vertex of an Eden cluster on the tree.

    On a tree the boundary of a connected n-set has (d-2)n + 2 vertices, so
    the FPP clock of the Eden chain is a sum of independent
    Exp((d-2)n + 2) gaps and vertex identities are not needed.
    """
    g = RegularTree(degree)
    rng = trial_rng(seed, *key)
    times = []
    total = 0.0
    n = 1
    block = 1 << 16
    while total <= t_max and n < max_size:
        ns = np.arange(n, n + block)
        gaps = rng.standard_exponential(block) / ((g.degree - 2) * ns + 2)
        cum = total + np.cumsum(gaps)
        times.append(cum)
        total = float(cum[-1])
        n += block
        block = min(block * 2, 1 << 22)
    return np.concatenate(times)


def size_at(times: np.ndarray, t: float) -> int:
    return 1 + int(np.searchsorted(times, t, side="right"))


@dataclass
class GrowthRateReport:
    graph: str
    t_fit: float
    t_check: float
    log_D: float
    max_rate_at_fit: float  # max over evaluation trials of log|A(t_fit)| / t_fit
    fraction_within: float  # fraction with |A(t_check)| <= D^t_check
    corollary_fraction: float  # fraction of checkpoints with t >= log_D(size)
    min_time_over_log_size: float
    trials: int

    @property
    def D(self) -> float:
        return math.exp(self.log_D)


def _sup_rate(times: np.ndarray, t_lo: float, t_hi: float) -> float:
    # log|A(t)|/t is maximized on [t_lo, t_hi] just after a jump or at t_lo
    sizes = np.arange(2, len(times) + 2)
    mask = (times >= t_lo) & (times <= t_hi)
    best = math.log(size_at(times, t_lo)) / t_lo
    if mask.any():
        best = max(best, float(np.max(np.log(sizes[mask]) / times[mask])))
    return best


def growth_rate_bound_check(
    graph: Graph,
    t_fit: float,
    t_check: float,
    trials: int,
    seed: int,
    calibration_trials: int | None = None,
    checkpoints: Sequence[int] = (10**3, 10**4, 10**5, 10**6),
) -> GrowthRateReport:
    """Fit D from calibration trials, then test |A(t)| <= D^t on fresh ones.

    log D is the largest log|A(t)|/t over t in [t_fit/2, t_fit] seen in the
    calibration set; evaluation trials use disjoint RNG streams.
    """
    calibration_trials = calibration_trials or trials
    if isinstance(graph, RegularTree):
        def path(k, t_end):
            return tree_size_path(graph.degree, seed, t_end, key=k)
    else:
        def path(k, t_end):
            _, tr = run_to_fpp_time(graph, seed, t_end, key=k)
            return np.asarray(tr.fpp_time)

    log_d = max(_sup_rate(path((0, i), t_fit), t_fit / 2, t_fit) for i in range(calibration_trials))
    rates, within, cor, ratios = [], 0, [], []
    for i in range(trials):
        times = path((1, i), t_check)
        rates.append(math.log(size_at(times, t_fit)) / t_fit)
        within += size_at(times, t_check) <= math.exp(log_d * t_check)
        for s in checkpoints:
            if s - 2 < len(times) and times[s - 2] <= t_check:
                t_s = float(times[s - 2])
                cor.append(t_s >= math.log(s) / log_d)
                ratios.append(t_s / math.log(s))
    return GrowthRateReport(
        graph.descriptor(),
        t_fit,
        t_check,
        log_d,
        max(rates),
        within / trials,
        float(np.mean(cor)) if cor else float("nan"),
        min(ratios) if ratios else float("nan"),
        trials,
    )


# ----------------------------------------------------------------------
# epsilon-subtree


@dataclass
class SubtreeEstimate:
    mean: float
    stderr: float
    trials: int
    epsilon: float
    depth: int
    truncation_mass: float


def subtree_expectation_check(d: int, trials: int, seed: int, tol: float = 1e-9) -> SubtreeEstimate:
    """Mean size of the maximal root subtree with all passage times < epsilon.

    The tree is (d-1)-ary with i.i.d. Exp(1) weights; epsilon solves
    P(Exp(1) < epsilon) = 1/(d+1).  Generations are sampled until the
    expected population of the next one falls below ``tol``.
    """
    if d < 3:
        raise ValueError("d must be >= 3")
    eps = growth_epsilon(d)
    rng = trial_rng(seed)
    m = (d - 1) / (d + 1)
    p_in = 1 / (d + 1)
    depth = 0
    while p_in * m ** (depth + 1) >= tol:
        depth += 1
    # truncated mass: sum_{k > depth} p_in m^k
    truncation = p_in * m ** (depth + 1) / (1 - m)

    alive = (rng.standard_exponential(trials) < eps).astype(np.int64)
    total = alive.copy()
    for _ in range(depth):
        kids = alive * (d - 1)
        n = int(kids.sum())
        if n == 0:
            break
        hits = rng.standard_exponential(n) < eps
        owner = np.repeat(np.arange(trials), kids)
        alive = np.bincount(owner, weights=hits, minlength=trials).astype(np.int64)
        total += alive
    return SubtreeEstimate(
        float(total.mean()), float(total.std(ddof=1) / math.sqrt(trials)), trials, eps, depth, truncation
    )
