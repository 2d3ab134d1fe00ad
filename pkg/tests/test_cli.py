from __future__ import annotations

import csv
import io
import json

import pytest

from edenlab.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, config_to_argv, main

HEADERS = {
    "simulate": "step,vertex,fpp_time,boundary_size,cluster_size",
    "census": "size,trial,count,profile_value,ratio,verified",
    "profile": "n,F,min_boundary_exact_size,witness",
    "qi-compare": "n,F_a,F_b,ratio_ab,ratio_ba",
    "betti": "size,trial,beta_0,beta_1,edges,triangles,bound_ok",
    "growth-control": "t,event_frequency,median_ratio_t_minus_2",
}


def run(tmp_path, *args) -> tuple[int, str]:
    out = tmp_path / "out.txt"
    code = main([*args, "--out", str(out)])
    return code, out.read_text() if out.exists() else ""


def rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def test_simulate_ten_steps(tmp_path):
    code, text = run(tmp_path, "simulate", "--graph", "lattice(d=2)", "--steps", "10", "--seed", "5")
    assert code == EXIT_OK
    assert text.splitlines()[0] == HEADERS["simulate"]
    assert len(rows(text)) == 10
    assert run(tmp_path, "simulate", "--graph", "lattice(d=2)", "--steps", "10", "--seed", "5")[1] == text


def test_profile_table(tmp_path):
    code, text = run(tmp_path, "profile", "--graph", "lattice(d=2)", "--n-max", "3")
    assert code == EXIT_OK and text.splitlines()[0] == HEADERS["profile"]
    assert [int(r["F"]) for r in rows(text)] == [4, 6, 7]


def test_betti_small(tmp_path):
    code, text = run(tmp_path, "betti", "--graph", "hyperbolic(7,3)", "--sizes", "1e3", "--trials", "5", "--seed", "1")
    assert code == EXIT_OK and text.splitlines()[0] == HEADERS["betti"]
    r = rows(text)
    assert len(r) == 5 and all(int(x["beta_1"]) > 0 for x in r)


def test_census_and_qi_headers(tmp_path):
    code, text = run(tmp_path, "census", "--graph", "tree(degree=3)", "--pattern", "ball:1", "--sizes", "100,1000", "--trials", "2", "--seed", "3")
    assert code == EXIT_OK and text.splitlines()[0] == HEADERS["census"]
    code, text = run(tmp_path, "qi-compare", "--graph-a", "lattice(d=2)", "--graph-b", "lattice(d=2,generators=king)", "--n-max", "4", "--seed", "1")
    assert code == EXIT_OK and text.splitlines()[0] == HEADERS["qi-compare"]


def test_growth_control_header(tmp_path):
    code, text = run(tmp_path, "growth-control", "--graph", "lattice(d=2)", "--times", "1,2", "--trials", "5", "--seed", "1", "--min-final", "0")
    assert code == EXIT_OK and text.splitlines()[0] == HEADERS["growth-control"]


def test_failed_check_exit_code(tmp_path):
    code, _ = run(tmp_path, "census", "--graph", "tree(degree=3)", "--pattern", "ball:1", "--sizes", "100,1000", "--trials", "2", "--seed", "3", "--expect-slope", "3.0")
    assert code == EXIT_FAIL


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--graph", "lattice(d=2)", "--steps", "3"],  # no seed
        ["simulate", "--graph", "klein(3)", "--steps", "3", "--seed", "1"],
        ["simulate", "--graph", "lattice(d=2)", "--seed", "1"],  # neither steps nor time
        ["census", "--graph", "lattice(d=2)", "--pattern", "punctured-ball:1", "--sizes", "10", "--seed", "1"],
        ["profile", "--graph", "lattice(d=2)", "--n-max", "99"],
        ["betti", "--graph", "tree(degree=3)", "--sizes", "10", "--seed", "1"],
        ["nosuchcommand"],
    ],
)
def test_usage_errors(tmp_path, argv):
    assert main(argv) == EXIT_USAGE


def test_census_bad_pattern_is_usage_error():
    # removing the centre of B_1 in Z^2 leaves four isolated cells
    assert main(["census", "--graph", "lattice(d=2)", "--pattern", "punctured-ball:1", "--sizes", "10", "--seed", "1"]) == EXIT_USAGE


def _trace(tmp_path, seed=7):
    path = tmp_path / "trace.csv"
    assert main(["simulate", "--graph", "lattice(d=2)", "--steps", "25", "--seed", str(seed), "--out", str(path)]) == 0
    return path


def _replay(tmp_path, trace, seed=7):
    rep = tmp_path / "rep.json"
    code = main(["replay", "--graph", "lattice(d=2)", "--trace", str(trace), "--seed", str(seed), "--out", str(tmp_path / "x"), "--report", str(rep)])
    return code, json.loads(rep.read_text())


def test_replay_identical(tmp_path):
    code, rep = _replay(tmp_path, _trace(tmp_path))
    assert code == EXIT_OK and all(rep["checks"].values())


def test_replay_wrong_seed(tmp_path):
    code, rep = _replay(tmp_path, _trace(tmp_path), seed=8)
    assert code == EXIT_FAIL
    assert rep["metrics"]["divergence_step"] == 1 and rep["checks"]["trace-invariants"]


def test_replay_tampered_boundary(tmp_path):
    path = _trace(tmp_path)
    lines = path.read_text().splitlines(keepends=True)
    cells = lines[12].rstrip("\n").split(",")
    cells[3] = str(int(cells[3]) + 1)
    lines[12] = ",".join(cells) + "\n"
    path.write_text("".join(lines))
    code, rep = _replay(tmp_path, path)
    assert code == EXIT_FAIL
    assert rep["metrics"]["invariant_failure_step"] == 12
    assert rep["metrics"]["divergence_step"] == 12


def test_render_from_snapshot(tmp_path):
    snap = tmp_path / "s.json"
    assert main(["simulate", "--graph", "hyperbolic(7,3)", "--steps", "60", "--seed", "1", "--out", str(tmp_path / "t.csv"), "--snapshot", str(snap)]) == 0
    code, svg = run(tmp_path, "render", "--snapshot", str(snap))
    assert code == EXIT_OK and svg.startswith("<svg") and svg.count("<path") == 61


def test_config_roundtrip(tmp_path):
    cfg = tmp_path / "c.ini"
    out = tmp_path / "p.csv"
    cfg.write_text(f"[run]\nkind = profile\ngraph = lattice(d=2)\nn_max = 3\nout = {out}\n")
    assert config_to_argv(str(cfg))[:1] == ["profile"]
    assert main(["run", "--config", str(cfg)]) == EXIT_OK
    assert [int(r["F"]) for r in rows(out.read_text())] == [4, 6, 7]


def test_config_errors(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[other]\nx = 1\n")
    assert main(["run", "--config", str(cfg)]) == EXIT_USAGE
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == EXIT_USAGE


def test_jobs_do_not_change_output(tmp_path):
    base = ["census", "--graph", "lattice(d=2)", "--pattern", "ball:1", "--sizes", "200,400", "--trials", "3", "--seed", "9"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--jobs", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_documented_flag_spellings(tmp_path):
    trace = tmp_path / "t.csv"
    assert main(["simulate", "--graph", "lattice(d=2)", "--fpp-time", "1.5", "--seed", "2", "--trace", str(trace)]) == EXIT_OK
    assert trace.read_text().startswith(HEADERS["simulate"])
    code, text = run(tmp_path, "profile", "--graph", "lattice(d=2)", "--n-max", "3", "--mode", "window", "--window", "4")
    assert code == EXIT_OK and [int(r["F"]) for r in rows(text)] == [4, 6, 7]
    assert main(["profile", "--graph", "lattice(d=2)", "--n-max", "3", "--mode", "window"]) == EXIT_USAGE
    code, text = run(tmp_path, "tree-analytics", "--degree", "3", "--t-max", "1", "--dt", "1e-3", "--trials", "1e4", "--seed", "1")
    assert code == EXIT_OK and text.splitlines()[0] == "t,quadrature,ode,rel_err"
