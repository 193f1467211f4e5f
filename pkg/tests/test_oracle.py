from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment, linprog

from conftest import circle_fn, interval_fn, star_fn
from nodalot import Circle, DegenerateError, Interval, InvalidInputError, Star, oracle_wasserstein, wasserstein
from nodalot import _simplex
from nodalot.oracle import (
    Atoms,
    DiscreteMeasurePair,
    discretize,
    reduced_costs,
    solve_discrete_ot,
    sorted_line_ot,
    transportation_simplex,
)
from nodalot.sampling import random_balanced, random_vertex_split_star

BUMP = interval_fn(1, (0, 0.5, 1), (0.5, 1, -1))
D3_FOLD = star_fn((1, 1, 1), (0, 0, 0.4, 1.0), (1, 0, 0.2, -1.0), (2, 0, 0.2, -1.0))


def _atoms(coords, masses, edges=None):
    coords = np.asarray(coords, dtype=float)
    edges = np.zeros(len(coords), dtype=int) if edges is None else np.asarray(edges)
    return Atoms(edges, coords, np.asarray(masses, dtype=float))


def _random_pair(rng, m, n):
    a = rng.uniform(0.1, 1.0, m)
    b = rng.uniform(0.1, 1.0, n)
    b *= a.sum() / b.sum()
    return _atoms(rng.uniform(0, 1, m), a), _atoms(rng.uniform(0, 1, n), b)


def test_discretize_midpoints():
    pair = discretize(interval_fn(1, (0, 0.5, 1), (0.5, 1, -1)), 0.25)
    np.testing.assert_allclose(pair.plus.coord, [0.125, 0.375])
    np.testing.assert_allclose(pair.plus.mass, [0.25, 0.25])
    assert pair.h == 0.25


def test_discretize_zero_function():
    pair = discretize(interval_fn(1), 0.1)
    assert len(pair.plus) == 0 and len(pair.minus) == 0


def test_discretize_star_edge():
    f = star_fn((1, 1, 1), (0, 0, 0.2, 1), (2, 0, 0.2, -1))
    pair = discretize(f, 0.1)
    np.testing.assert_array_equal(pair.minus.edge, [2, 2])
    np.testing.assert_allclose(pair.minus.coord, [0.05, 0.15])
    np.testing.assert_allclose(pair.minus.mass, [0.1, 0.1])


def test_discretize_cells_and_balance():
    f = random_balanced(np.random.default_rng(3), Interval(2), 9)
    h = 0.013
    pair = discretize(f, h)
    assert pair.plus.total == pytest.approx(pair.minus.total, rel=1e-12)
    l1, _, _ = f.norms()
    assert pair.plus.total + pair.minus.total == pytest.approx(l1, rel=1e-12)
    for side in (pair.plus, pair.minus):
        gaps = np.diff(np.sort(side.coord))
        # neighbouring midpoints inside one piece are one cell apart
        assert np.min(gaps) <= h * (1 + 1e-9)


@pytest.mark.parametrize("h", [0.0, -1.0, float("nan")])
def test_discretize_rejects_bad_step(h):
    with pytest.raises(InvalidInputError):
        discretize(BUMP, h)


def test_single_pair():
    pair = DiscreteMeasurePair(_atoms([0.25], [0.5]), _atoms([0.75], [0.5]), 1.0)
    assert solve_discrete_ot(pair, Interval(1), 1).value == pytest.approx(0.25, rel=1e-15)


def test_empty_measure_is_degenerate():
    pair = DiscreteMeasurePair(Atoms.empty(), _atoms([0.75], [0.5]), 1.0)
    with pytest.raises(DegenerateError):
        solve_discrete_ot(pair, Interval(1), 1)


@pytest.mark.parametrize("f, expected", [(BUMP, 0.25), (D3_FOLD, 0.12)])
def test_fine_grid_examples(f, expected):
    assert abs(oracle_wasserstein(f, 1, 1e-3).value - expected) <= 3e-3


@pytest.mark.parametrize(
    "f",
    [
        BUMP,
        interval_fn(1, (0, 0.4, 0.5), (0.5, 0.7, -1)),
        D3_FOLD,
        star_fn((1, 1, 1, 1), (0, 0, 0.25, 1), (1, 0, 0.25, 1), (2, 0, 0.25, -1), (3, 0, 0.25, -1)),
    ],
)
@pytest.mark.parametrize("p", [1, 2])
def test_convergence_constant(f, p):
    exact = wasserstein(f, p).value
    errs = [abs(oracle_wasserstein(f, p, h).value - exact) / h for h in (1e-2, 5e-3, 1e-3)]
    assert max(errs) <= 3


def test_convergence_constant_on_circle():
    f = circle_fn((0, 1, 1), (1, 2, -1), (3, 3.5, 1), (3.5, 4.5, -0.5))
    exact = wasserstein(f, 2).value
    for h in (1e-2, 5e-3):
        assert abs(oracle_wasserstein(f, 2, h).value - exact) <= 3 * h


def _marginals(plan, pair):
    out = []
    for side, edge, coord in ((pair.plus, plan.src_edge, plan.src_start), (pair.minus, plan.dst_edge, plan.dst_start)):
        index = {(int(e), float(x)): k for k, (e, x) in enumerate(zip(side.edge, side.coord))}
        got = np.zeros(len(side))
        np.add.at(got, [index[(int(e), float(x))] for e, x in zip(edge, coord)], plan.mass)
        out.append((got, side.mass))
    return out


@pytest.mark.parametrize(
    "f",
    [
        random_balanced(np.random.default_rng(1), Interval(1)),
        random_balanced(np.random.default_rng(2), Circle()),
        random_balanced(np.random.default_rng(3), Star((0.5, 1.0, 0.7))),
        random_vertex_split_star(np.random.default_rng(4), 4),
    ],
)
@pytest.mark.parametrize("p", [1, 1.5, 2])
def test_plan_marginals_and_certificate(f, p):
    h = 0.02
    pair = discretize(f, h)
    res = solve_discrete_ot(pair, f.domain, p)
    for got, want in _marginals(res.plan, pair):
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12 * pair.plus.total)
    assert res.min_reduced_cost >= -1e-12
    assert res.value == pytest.approx(res.plan.total_cost_p ** (1 / p), rel=1e-12)


def test_p1_second_stage_keeps_the_optimum():
    f = random_balanced(np.random.default_rng(8), Star((1.0, 0.4, 0.6)))
    pair = discretize(f, 0.02)
    lex = solve_discrete_ot(pair, f.domain, 1)
    plain = solve_discrete_ot(pair, f.domain, 1, lexicographic=False)
    assert lex.value == pytest.approx(plain.value, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_presort_does_not_change_the_value(seed):
    f = random_balanced(np.random.default_rng(seed), Circle())
    pair = discretize(f, 0.02)
    a = solve_discrete_ot(pair, f.domain, 2).value
    b = solve_discrete_ot(pair, f.domain, 2, presort=False).value
    assert a == pytest.approx(b, rel=1e-12)


def test_tree_flows_recover_the_basic_solution():
    a = np.array([0.3, 0.5, 0.2])
    b = np.array([0.4, 0.4, 0.2])
    rows, cols, flow = _simplex.northwest_corner(a, b)
    ok, x = _simplex.tree_flows(3, 3, rows, cols, a, b)
    assert ok
    np.testing.assert_allclose(x, flow, atol=1e-15)


def test_tree_flows_rejects_a_cycle():
    rows = np.array([0, 0, 1, 1, 2])
    cols = np.array([0, 1, 0, 1, 2])
    ok, _ = _simplex.tree_flows(3, 3, rows, cols, np.ones(3), np.ones(3))
    assert not ok


def test_best_rotation_minimizes_the_cyclic_start_cost():
    rng = np.random.default_rng(0)
    m, n = 7, 9
    cost = rng.uniform(0, 1, (m, n))
    a = rng.uniform(0.1, 1, m)
    b = rng.uniform(0.1, 1, n)
    b *= a.sum() / b.sum()

    def nw_cost(k):
        order = np.roll(np.arange(n), -k)
        rows, cols, flow = _simplex.northwest_corner(a, b[order])
        return float(np.sum(flow * cost[:, order][rows, cols]))

    k = int(_simplex.best_rotation(cost, a, b))
    assert nw_cost(k) == pytest.approx(min(nw_cost(j) for j in range(n)), rel=1e-12)


def test_degenerate_assignment():
    # a permutation problem: every basis has n - 1 zero flows
    rng = np.random.default_rng(5)
    n = 60
    cost = rng.uniform(0, 1, (n, n))
    sol = transportation_simplex(cost, np.ones(n), np.ones(n))
    value = float(np.sum(sol.flow * cost[sol.rows, sol.cols]))
    r, c = linear_sum_assignment(cost)
    assert value == pytest.approx(cost[r, c].sum(), rel=1e-12)
    assert np.min(reduced_costs(cost, sol)) >= -1e-12


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), p=st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_simplex_matches_sorting_on_the_line(seed, p):
    rng = np.random.default_rng(seed)
    plus, minus = _random_pair(rng, int(rng.integers(1, 60)), int(rng.integers(1, 60)))
    pair = DiscreteMeasurePair(plus, minus, 1.0)
    ref, _ = sorted_line_ot(plus, minus, p)
    # the solver itself raises if the two routes disagree beyond 1e-12
    got = solve_discrete_ot(pair, Interval(1), p, presort=False).value
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1))
def test_simplex_matches_assignment_on_general_costs(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 8)), int(rng.integers(1, 8))
    cost = rng.uniform(0, 1, (m, n))
    a = rng.uniform(0.1, 1, m)
    b = rng.uniform(0.1, 1, n)
    b *= a.sum() / b.sum()
    sol = transportation_simplex(cost, a, b)
    value = float(np.sum(sol.flow * cost[sol.rows, sol.cols]))
    eq = np.vstack([np.kron(np.eye(m), np.ones(n)), np.kron(np.ones(m), np.eye(n))])
    lp = linprog(cost.ravel(), A_eq=eq, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    assert value == pytest.approx(lp.fun, rel=1e-9, abs=1e-12)
    assert np.min(sol.flow) >= 0
