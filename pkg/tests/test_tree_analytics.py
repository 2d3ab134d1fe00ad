from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from edenlab.graphs import RegularTree
from edenlab.tree_analytics import (
    expected_size_mc,
    expected_size_ode,
    expected_size_quadrature,
    exponential_bound_check,
    growth_rate_bound_check,
    size_at,
    subtree_expectation_check,
    tree_size_path,
)
from oracles import subtree_mean_closed_form, tree_expectation_closed_form


@pytest.mark.parametrize("n", [3, 4, 5])
def test_ode_solution_matches_oracle(n):
    grid = np.linspace(0, 3, 31)
    ode = expected_size_ode(n, grid)
    want = [tree_expectation_closed_form(n, t) for t in grid]
    assert np.allclose(ode.values, want, rtol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_ode_solves_integral_equation(n):
    """g(t) = 2 - e^{-t} + (n-1) int_0^t e^{-s} g(t-s) ds, by fine quadrature."""
    t = 1.3
    s = np.linspace(0, t, 20001)
    integrand = np.exp(-s) * np.array([tree_expectation_closed_form(n, t - x) for x in s])
    rhs = 2 - math.exp(-t) + (n - 1) * trapezoid(integrand, s)
    assert rhs == pytest.approx(tree_expectation_closed_form(n, t), rel=1e-6)


def test_quadrature_initial_and_accuracy():
    q = expected_size_quadrature(3, 2.0, 1e-3)
    assert q.values[0] == 1.0
    rel = abs(q.at(2.0) - tree_expectation_closed_form(3, 2.0)) / tree_expectation_closed_form(3, 2.0)
    assert rel < 1e-4


def test_quadrature_rejects_bad_steps():
    with pytest.raises(ValueError):
        expected_size_quadrature(3, 1.0, 0.3)
    with pytest.raises(ValueError):
        expected_size_quadrature(2, 1.0)


def test_mc_small():
    est = expected_size_mc(3, 0.5, 2000, seed=4)
    assert abs(est.mean - tree_expectation_closed_form(3, 0.5)) < 4 * est.stderr


def test_exponential_bound():
    for n in (3, 4, 5):
        rep = exponential_bound_check(n, 5.0)
        assert rep.holds and rep.worst_ratio < 1
        assert rep.log_slope == pytest.approx(n - 2, abs=0.05)


def test_subtree_closed_form():
    assert subtree_mean_closed_form(3) == pytest.approx(0.5)


def test_subtree_mc():
    est = subtree_expectation_check(3, 20_000, seed=1)
    assert abs(est.mean - 0.5) < 4 * est.stderr
    assert est.truncation_mass < 1e-8
    assert 1 - math.exp(-est.epsilon) == pytest.approx(0.25)


def test_count_path_matches_engine_law():
    """The count-only path and the full engine give the same mean |A(1)|."""
    sizes = [size_at(tree_size_path(3, 7, 1.0, key=(i,)), 1.0) for i in range(3000)]
    se = np.std(sizes, ddof=1) / math.sqrt(len(sizes))
    assert abs(np.mean(sizes) - tree_expectation_closed_form(3, 1.0)) < 4 * se


def test_growth_rate_small():
    rep = growth_rate_bound_check(RegularTree(3), 4.0, 6.0, 20, seed=2, checkpoints=(10, 100))
    assert math.isfinite(rep.log_D) and rep.log_D > 0
    assert rep.max_rate_at_fit > 0
