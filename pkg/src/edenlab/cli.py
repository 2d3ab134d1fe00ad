"""Command-line entry point: ``edenlab <subcommand> ...``.

Exit status is 0 when every check passed, 1 when a check failed and 2 for
usage errors (bad flags, malformed descriptors, invalid patterns).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import census as census_mod
from . import growth, isoperimetry, nerve, render, tree_analytics
from .graphs import GraphError, RegularTree, ball_volume_bound_check, parse_graph

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    metrics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)  # invariant name -> passed
    wall_clock: float = 0.0
    rng: str = ""

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, default=str)


# ----------------------------------------------------------------------
# helpers


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return str(x)


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def parse_sizes(text: str) -> list[int]:
    try:
        vals = [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse sizes {text!r}") from exc
    if not vals or any(v < 1 for v in vals):
        raise UsageError("sizes must be positive")
    return vals


def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse list {text!r}") from exc


def _graph(text: str):
    try:
        return parse_graph(text)
    except GraphError as exc:
        raise UsageError(str(exc)) from exc


def _rng_audit(seed: int, scheme: str) -> str:
    return f"PCG64(SeedSequence({seed}, spawn_key={scheme}))"


# ----------------------------------------------------------------------
# subcommands


def cmd_simulate(a) -> ExperimentReport:
    g = _graph(a.graph)
    rep = ExperimentReport("simulate", vars(a).copy(), rng=_rng_audit(a.seed, "()"))
    state, trace = _simulate(g, a)
    _emit(trace.to_csv(g), a.out)
    if a.snapshot:
        Path(a.snapshot).write_text(state.snapshot_json())
    rep.metrics = {"rows": len(trace), "cluster_size": len(state), "fpp_clock": state.fpp_clock, "truncated": trace.truncated}
    rep.checks["boundary-recompute"] = set(state.boundary) == state.recompute_boundary()
    rep.checks["fpp-increasing"] = bool(np.all(np.diff(trace.fpp_time) > 0))
    return rep


def _simulate(g, a):
    if (a.steps is None) == (a.time is None):
        raise UsageError("give exactly one of --steps or --time")
    if a.steps is not None:
        if a.steps < 0:
            raise UsageError("--steps must be >= 0")
        return growth.run_to_size(g, a.seed, a.steps + 1)
    return growth.run_to_fpp_time(g, a.seed, a.time)


def check_trace_invariants(g, trace: growth.Trace) -> int | None:
    """First step whose row breaks a trace invariant, or None."""
    state = growth.ClusterState(g, 0)
    prev_t = 0.0
    for k in range(len(trace)):
        step, v, t = trace.step[k], trace.vertex[k], trace.fpp_time[k]
        if step != k + 1 or trace.cluster_size[k] != step + 1 or t <= prev_t or v not in state.boundary:
            return step
        growth._infect(state, v, t)
        if trace.boundary_size[k] != len(state.boundary):
            return step
        prev_t = t
    return None


def cmd_replay(a) -> ExperimentReport:
    g = _graph(a.graph)
    rep = ExperimentReport("replay", vars(a).copy(), rng=_rng_audit(a.seed, "()"))
    text = Path(a.trace).read_text()
    try:
        given = growth.read_trace_csv(text, g)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"unreadable trace: {exc}") from exc
    bad = check_trace_invariants(g, given)
    rep.checks["trace-invariants"] = bad is None
    if bad is not None:
        rep.metrics["invariant_failure_step"] = bad
    if a.steps is None and a.time is None:
        a.steps = len(given)
    state, trace = _simulate(g, a)
    fresh = trace.to_csv(g)
    rep.checks["byte-identical"] = fresh == text
    if fresh != text:
        old, new = text.splitlines(), fresh.splitlines()
        first = next((i for i, (x, y) in enumerate(zip(old, new)) if x != y), min(len(old), len(new)))
        rep.metrics["divergence_step"] = first  # line 0 is the header
    rep.checks["boundary-recompute"] = set(state.boundary) == state.recompute_boundary()
    return rep


def cmd_census(a) -> ExperimentReport:
    g = _graph(a.graph)
    try:
        spec = census_mod.load_pattern(g, a.pattern)
    except (census_mod.PatternError, GraphError, OSError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad pattern: {exc}") from exc
    sizes = parse_sizes(a.sizes)
    if sizes != sorted(sizes):
        raise UsageError("sizes must be increasing")
    rep = ExperimentReport("census", vars(a).copy(), rng=_rng_audit(a.seed, "(size_index, trial)"))
    tab = census_mod.census_scaling_experiment(g, spec, sizes, a.trials, a.seed, a.jobs, a.orbit)
    _emit(csv_text(("size", "trial", "count", "profile_value", "ratio", "verified"), tab.rows), a.out)
    rep.metrics = {"medians": tab.medians(), "slope": tab.slope, "profile_tag": tab.tag}
    rep.checks["centers-reverified"] = tab.all_verified
    if a.expect_slope is not None:
        rep.checks["slope-within-tolerance"] = abs(tab.slope - a.expect_slope) <= a.slope_tol
    return rep


def cmd_profile(a) -> ExperimentReport:
    g = _graph(a.graph)
    rep = ExperimentReport("profile", vars(a).copy(), rng="none (deterministic enumeration)")
    if a.mode == "window" and not a.window:
        raise UsageError("--mode window needs --window SIDE")
    if a.mode == "connected" and a.window:
        raise UsageError("--window conflicts with --mode connected")
    try:
        if a.window:
            if not hasattr(g, "dim"):
                raise UsageError("--window needs a lattice")
            tab = isoperimetry.window_profile(g, isoperimetry.square_window(a.window, g.dim), a.n_max)
        else:
            tab = isoperimetry.exact_connected_profile(g, a.n_max)
    except isoperimetry.ProfileError as exc:
        raise UsageError(str(exc)) from exc
    rows = []
    for n in range(1, a.n_max + 1):
        wit = " ".join(g.format_vertex(v) for v in sorted(tab.witnesses[n], key=g.sort_key))
        rows.append((n, tab[n], tab.exact_size.get(n, ""), wit))
    _emit(csv_text(("n", "F", "min_boundary_exact_size", "witness"), rows), a.out)
    rep.metrics = {"profile": tab.as_list(), "mode": tab.mode, "sets_visited": tab.sets_visited}
    try:
        sub = isoperimetry.subadditivity_check(tab)
        rep.checks["subadditivity"] = sub.passed
    except isoperimetry.ProfileError:
        rep.checks["subadditivity"] = False
    return rep


def cmd_qi(a) -> ExperimentReport:
    ga, gb = _graph(a.graph_a), _graph(a.graph_b)
    rep = ExperimentReport("qi-compare", vars(a).copy(), rng=_rng_audit(a.seed, "default_rng"))
    try:
        r = isoperimetry.qi_compare(ga, gb, a.n_max, samples=a.samples, seed=a.seed)
    except isoperimetry.ProfileError as exc:
        raise UsageError(str(exc)) from exc
    rows = [(n + 1, fa, fb, fa / fb, fb / fa) for n, (fa, fb) in enumerate(zip(r.profile_a, r.profile_b))]
    _emit(csv_text(("n", "F_a", "F_b", "ratio_ab", "ratio_ba"), rows), a.out)
    rep.metrics = {"C": r.C, "K": r.K, "bound_ab": r.bound_ab, "bound_ba": r.bound_ba, "max_ratio_ab": r.max_ratio_ab, "max_ratio_ba": r.max_ratio_ba}
    rep.checks["ratio-within-constructive-bound"] = r.max_ratio_ab <= r.bound_ab and r.max_ratio_ba <= r.bound_ba
    rep.checks["size-lemma"] = r.size_lemma_ok
    return rep


def cmd_betti(a) -> ExperimentReport:
    g = _graph(a.graph)
    sizes = parse_sizes(a.sizes)
    rep = ExperimentReport("betti", vars(a).copy(), rng=_rng_audit(a.seed, "(size_index, trial)"))
    try:
        tab = nerve.betti_scaling_experiment(g, sizes, a.trials, a.seed, a.jobs)
    except nerve.NerveError as exc:
        if "not a tessellation" in str(exc):
            raise UsageError(str(exc)) from exc
        rep.checks["simplex-bound"] = False
        rep.metrics["error"] = str(exc)
        return rep
    _emit(csv_text(("size", "trial", "beta_0", "beta_1", "edges", "triangles", "bound_ok"), tab.rows), a.out)
    rep.metrics = {"medians": tab.medians(), "slope": tab.slope, "r_squared": tab.r_squared, "c_low": tab.c_low, "c_high": tab.c_high}
    rep.checks["simplex-bound"] = all(r[6] for r in tab.rows)
    if a.min_r2 is not None:
        rep.checks["linear-fit"] = tab.r_squared > a.min_r2 and tab.slope > 0
    return rep


def cmd_tree(a) -> ExperimentReport:
    rep = ExperimentReport("tree-analytics", vars(a).copy())
    n = a.degree
    if n < 3:
        raise UsageError("--degree must be >= 3")
    if a.kind == "expectation":
        q = tree_analytics.expected_size_quadrature(n, a.t_max, a.dt)
        o = tree_analytics.expected_size_ode(n, q.grid)
        rel = np.abs(q.values - o.values) / o.values
        stride = max(1, int(round(a.report_dt / a.dt)))
        rows = [(q.grid[i], q.values[i], o.values[i], rel[i]) for i in range(0, len(q.grid), stride)]
        _emit(csv_text(("t", "quadrature", "ode", "rel_err"), rows), a.out)
        rep.metrics = {"max_rel_err": float(rel.max())}
        rep.checks["quadrature-vs-ode"] = float(rel.max()) < a.tol
        rep.rng = "none"
    elif a.kind == "mc":
        a.seed = _need_seed(a)
        rep.rng = _rng_audit(a.seed, "(time_index, trial)")
        times = parse_floats(a.times)
        q = tree_analytics.expected_size_quadrature(n, max(times), a.dt)
        rows = []
        ok = True
        for ti, t in enumerate(times):
            est = tree_analytics.expected_size_mc(n, t, a.trials, a.seed, key=(ti,))
            exact = q.at(t)
            z = abs(est.mean - exact) / est.stderr if est.stderr > 0 else math.inf
            ok &= z < 3
            rows.append((t, est.mean, est.stderr, exact, z))
        _emit(csv_text(("t", "mc_mean", "mc_stderr", "quadrature", "z"), rows), a.out)
        rep.checks["mc-within-3-stderr"] = ok
    elif a.kind == "bound":
        rep.rng = "none"
        try:
            r = tree_analytics.exponential_bound_check(n, a.t_max, a.dt)
        except AssertionError as exc:
            rep.checks["exponential-bound"] = False
            rep.metrics["error"] = str(exc)
            return rep
        _emit(csv_text(("degree", "C", "t_max", "worst_ratio", "log_slope"), [(n, r.constant, r.t_max, r.worst_ratio, r.log_slope)]), a.out)
        rep.checks["exponential-bound"] = r.holds
    elif a.kind == "subtree":
        a.seed = _need_seed(a)
        rep.rng = _rng_audit(a.seed, "()")
        r = tree_analytics.subtree_expectation_check(n, a.trials, a.seed)
        _emit(csv_text(("degree", "trials", "epsilon", "depth", "mean", "stderr"), [(n, r.trials, r.epsilon, r.depth, r.mean, r.stderr)]), a.out)
        rep.metrics = asdict(r)
        rep.checks["mean-near-half"] = abs(r.mean - 0.5) <= a.tol
    elif a.kind == "growth-rate":
        a.seed = _need_seed(a)
        rep.rng = _rng_audit(a.seed, "(0, i) calibration / (1, i) evaluation")
        r = tree_analytics.growth_rate_bound_check(RegularTree(n), a.t_fit, a.t_check, a.trials, a.seed)
        row = (r.t_fit, r.t_check, r.log_D, r.max_rate_at_fit, r.fraction_within, r.corollary_fraction, r.min_time_over_log_size)
        _emit(csv_text(("t_fit", "t_check", "log_D", "max_rate_at_fit", "fraction_within", "corollary_fraction", "min_t_over_log_size"), [row]), a.out)
        rep.metrics = asdict(r)
        rep.checks["rate-below-log-D"] = r.max_rate_at_fit < r.log_D
        rep.checks["fraction-within"] = r.fraction_within >= 0.99
    return rep


def cmd_growth_control(a) -> ExperimentReport:
    g = _graph(a.graph)
    times = parse_floats(a.times)
    rep = ExperimentReport("growth-control", vars(a).copy(), rng=_rng_audit(a.seed, "(trial,)"))
    r = growth.growth_control_experiment(g, times, a.trials, a.seed)
    rows = list(zip(r.times, r.event_frequency, r.median_ratio))
    _emit(csv_text(("t", "event_frequency", "median_ratio_t_minus_2"), rows), a.out)
    rep.metrics = asdict(r)
    f = r.event_frequency
    rep.checks["nondecreasing"] = all(x <= y for x, y in zip(f, f[1:]))
    rep.checks["final-frequency"] = f[-1] >= a.min_final
    return rep


def cmd_equivalence(a) -> ExperimentReport:
    g = _graph(a.graph)
    rep = ExperimentReport("equivalence", vars(a).copy(), rng=_rng_audit(a.seed, "(0, trial) engine / (1,) oracle"))
    r = growth.equivalence_experiment(g, a.steps, a.trials, a.seed)
    _emit(csv_text(("shape", "eden_count", "fpp_count"), zip(r.shapes, r.eden, r.fpp)), a.out)
    rep.metrics = {"shapes": len(r.shapes), "chi2": r.chi2, "dof": r.dof, "p_value": r.p_value}
    rep.checks["chi-square"] = r.p_value > a.alpha
    return rep


def cmd_ball_volume(a) -> ExperimentReport:
    g = _graph(a.graph)
    rep = ExperimentReport("ball-volume", vars(a).copy(), rng="none")
    reps = [ball_volume_bound_check(g, R) for R in range(a.radius + 1)]
    _emit(csv_text(("R", "volume", "bound", "passed"), [(r.radius, r.volume, r.bound, r.passed) for r in reps]), a.out)
    rep.checks["volume-bound"] = all(r.passed for r in reps)
    return rep


def cmd_render(a) -> ExperimentReport:
    rep = ExperimentReport("render", vars(a).copy(), rng="none")
    try:
        snap = json.loads(Path(a.snapshot).read_text())
        g = _graph(snap["graph"])
        verts = [g.parse_vertex(r["vertex"]) for r in snap["infected"]]
    except (OSError, KeyError, json.JSONDecodeError, GraphError) as exc:
        raise UsageError(f"bad snapshot: {exc}") from exc
    try:
        svg = render.render_cluster(g, verts, a.size)
    except GraphError as exc:
        raise UsageError(str(exc)) from exc
    _emit(svg, a.out)
    rep.metrics = {"tiles": len(verts)}
    return rep


def _need_seed(a) -> int:
    if a.seed is None:
        raise UsageError("this experiment needs --seed")
    return a.seed


# ----------------------------------------------------------------------
# parser


def _count(text: str) -> int:
    """Positive-integer flag that also takes ``1e4``."""
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if x != int(x) or x < 0:
        raise argparse.ArgumentTypeError(f"not a whole count: {text!r}")
    return int(x)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="edenlab", description="Eden growth / FPP experiments on vertex-transitive graphs")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True, jobs=False):
        p.add_argument("--seed", type=int, required=seed, default=None)
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        p.add_argument("--report", default=None, help="write a JSON run report here")
        if jobs:
            p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("simulate", help="grow one cluster and write its trace CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--steps", type=_count)
    p.add_argument("--time", "--fpp-time", dest="time", type=float)
    p.add_argument("--snapshot", help="also write the final cluster as JSON")
    common(p)
    p.add_argument("--trace", dest="out", default=argparse.SUPPRESS, help="alias of --out")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("replay", help="re-run a trace and byte-compare it")
    p.add_argument("--graph", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--steps", type=_count)
    p.add_argument("--time", "--fpp-time", dest="time", type=float)
    common(p)
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("census", help="greedy disjoint pattern-ball census")
    p.add_argument("--graph", required=True)
    p.add_argument("--pattern", required=True, help="JSON file, ball:R or punctured-ball:R")
    p.add_argument("--sizes", required=True)
    p.add_argument("--trials", type=_count, default=10)
    p.add_argument("--orbit", action="store_true", help="accept any rotation/reflection of the pattern")
    p.add_argument("--expect-slope", type=float)
    p.add_argument("--slope-tol", type=float, default=0.1)
    common(p, jobs=True)
    p.set_defaults(fn=cmd_census)

    p = sub.add_parser("profile", help="exact isoperimetric profile")
    p.add_argument("--graph", required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--mode", choices=("connected", "window"), default=None)
    p.add_argument("--window", type=int, help="exhaustive search inside a side^d box instead")
    common(p, seed=False)
    p.set_defaults(fn=cmd_profile)

    p = sub.add_parser("qi-compare", help="compare profiles of two quasi-isometric graphs")
    p.add_argument("--graph-a", required=True)
    p.add_argument("--graph-b", required=True)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--samples", type=int, default=200)
    common(p)
    p.set_defaults(fn=cmd_qi)

    p = sub.add_parser("betti", help="Betti numbers of cluster nerves")
    p.add_argument("--graph", required=True)
    p.add_argument("--sizes", required=True)
    p.add_argument("--trials", type=_count, default=5)
    p.add_argument("--min-r2", type=float)
    common(p, jobs=True)
    p.set_defaults(fn=cmd_betti)

    p = sub.add_parser("tree-analytics", help="expected growth on regular trees")
    p.add_argument("--kind", choices=("expectation", "mc", "bound", "subtree", "growth-rate"), default="expectation")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--report-dt", type=float, default=0.1)
    p.add_argument("--times", default="1,2")
    p.add_argument("--trials", type=_count, default=10_000)
    p.add_argument("--tol", type=float, default=0.005)
    p.add_argument("--t-fit", type=float, default=10.0)
    p.add_argument("--t-check", type=float, default=15.0)
    common(p, seed=False)
    p.set_defaults(fn=cmd_tree)

    p = sub.add_parser("growth-control", help="frequency of |A(t+eps)| <= |A(t)| + |dA(t)|")
    p.add_argument("--graph", required=True)
    p.add_argument("--times", default="5,10,20")
    p.add_argument("--trials", type=_count, default=500)
    p.add_argument("--min-final", type=float, default=0.95)
    common(p)
    p.set_defaults(fn=cmd_growth_control)

    p = sub.add_parser("equivalence", help="Eden chain vs per-site exponential clocks")
    p.add_argument("--graph", required=True)
    p.add_argument("--steps", type=_count, default=3)
    p.add_argument("--trials", type=_count, default=100_000)
    p.add_argument("--alpha", type=float, default=0.01)
    common(p)
    p.set_defaults(fn=cmd_equivalence)

    p = sub.add_parser("ball-volume", help="|B_R(v0)| against d^(R+1) for R = 0..radius")
    p.add_argument("--graph", required=True)
    p.add_argument("--radius", type=int, default=8)
    common(p, seed=False)
    p.set_defaults(fn=cmd_ball_volume)

    p = sub.add_parser("render", help="SVG of a cluster snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--size", type=int, default=800)
    common(p, seed=False)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("run", help="run an experiment described by an INI config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=None)
    return ap


def config_to_argv(path: str) -> list[str]:
    """``[run]`` must name ``kind``; every other key becomes ``--key value``.

    Boolean ``true`` values become bare flags and ``false`` ones are dropped.
    """
    cp = configparser.ConfigParser()
    try:
        if not cp.read(path):
            raise UsageError(f"cannot read config {path}")
    except configparser.Error as exc:
        raise UsageError(f"malformed config: {exc}") from exc
    if not cp.has_section("run") or "kind" not in cp["run"]:
        raise UsageError("config needs a [run] section with a 'kind' key")
    argv = [cp["run"]["kind"]]
    for section in cp.sections():
        for key, val in cp[section].items():
            if section == "run" and key == "kind":
                continue
            flag = "--" + key.replace("_", "-")
            if val.lower() == "true":
                argv.append(flag)
            elif val.lower() != "false":
                argv += [flag, val]
    return argv


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if a.fn is None:
            inner = config_to_argv(a.config)
            if inner[0] == "run":
                raise UsageError("a config cannot dispatch to 'run'")
            try:
                a = ap.parse_args(inner)
            except SystemExit as exc:
                return int(exc.code or 0)
        if getattr(a, "jobs", 1) < 1:
            raise UsageError("--jobs must be >= 1")
        t0 = time.perf_counter()
        rep = a.fn(a)
        rep.wall_clock = time.perf_counter() - t0
    except UsageError as exc:
        print(f"edenlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rep.config.pop("fn", None)
    if a.report:
        Path(a.report).write_text(rep.to_json())
    for name, ok in rep.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {rep.kind}:{name}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
