"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

from __future__ import annotations

import time

import numpy as np
import pytest

from nodalot import (
    Circle,
    ClassSpec,
    Interval,
    SolverError,
    Star,
    adjacency_predicate,
    check_plan_monotonicity,
    class_membership,
    concentrate_to_steps,
    effective_nodal_set,
    minimize_circle,
    minimize_interval,
    minimize_star_closed_form,
    minimize_star_numeric,
    oracle_wasserstein,
    shift_to_adjacent,
    wasserstein,
)
from nodalot.cli import sweep_beta_rows
from nodalot.oracle import Atoms, DiscreteMeasurePair, solve_discrete_ot, sorted_line_ot
from nodalot.sampling import random_balanced, random_spec, random_vertex_split_star, random_x
from nodalot.star import fold_to_line, vertex_split_edges, wasserstein_folded

STAR_H = 2e-3


@pytest.fixture
def report(capsys):
    def emit(k: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'} ({detail})")

    return emit


def interval_formula(c1, cinf, N, p):
    return 2.0 ** (-(p + 1) / p) * c1 ** (1 + 1 / p) / (N * cinf)


def even_star_formula(c1, cinf, N, D, p):
    return (c1 / cinf) * c1 ** (1 / p) * 2.0 ** (-1 - 1 / p) / (N - 1 + D / 2)


def odd_star_formula(c1, cinf, N, D):
    Dt = (D + 1) * (D - 1) / (2 * D)
    return c1**2 / (4 * (N - 1 + Dt) * cinf)


def d3_short_formula(c1, cinf, N, beta):
    return c1**2 / (4 * cinf) * ((1 - beta) ** 2 + 3 * N * beta**2) / N


# oracle runs shared by the star criteria and the plan-legality criterion


@pytest.fixture(scope="module")
def even_star_runs():
    runs = []
    for D in (2, 4, 6):
        for N in (1, 2, 3):
            for p in (1, 2):
                spec = ClassSpec(1.0, 1.0, N, Star((1.0,) * D))
                closed = minimize_star_closed_form(spec, p)
                numeric = minimize_star_numeric(spec, p)
                oracle = oracle_wasserstein(closed.f_star, p, STAR_H)
                runs.append((D, N, p, spec, closed, numeric, oracle))
    return runs


@pytest.fixture(scope="module")
def odd_star_runs():
    runs = []
    for D in (3, 5):
        for N in (1, 2, 3):
            spec = ClassSpec(1.0, 1.0, N, Star((1.0,) * D))
            closed = minimize_star_closed_form(spec, 1)
            numeric = minimize_star_numeric(spec, 1)
            oracle = oracle_wasserstein(closed.f_star, 1, STAR_H)
            runs.append((D, N, spec, closed, numeric, oracle))
    return runs


@pytest.fixture(scope="module")
def fold_runs():
    rng = np.random.default_rng(20240501)
    runs = []
    for _ in range(300):
        f = random_vertex_split_star(rng, int(rng.integers(2, 6)), float(rng.uniform(0.5, 2.0)), edge_range=(0.2, 0.8))
        split = vertex_split_edges(f)
        for p in (1, 2):
            fold, _ = wasserstein_folded(fold_to_line(f, split), p)
            oracle = oracle_wasserstein(f, p, STAR_H)
            runs.append((f, p, fold, oracle))
    return runs


def test_criterion_1_interval_closed_form(report):
    start = time.perf_counter()
    worst_rel, worst_oracle = 0.0, 0.0
    for cinf in (0.5, 1.0, 2.0):
        for N in (1, 2, 3, 5):
            for p in (1, 2):
                spec = ClassSpec(cinf, 1.0, N, Interval(4.0))
                res = minimize_interval(spec, p)
                expected = interval_formula(1.0, cinf, N, p)
                worst_rel = max(worst_rel, abs(res.value - expected) / expected)
                worst_oracle = max(worst_oracle, abs(oracle_wasserstein(res.f_star, p, 1e-3).value - expected))
    elapsed = time.perf_counter() - start
    ok = worst_rel <= 1e-12 and worst_oracle <= 3e-3 and elapsed < 10
    report(1, ok, f"rel err {worst_rel:.1e}, oracle err {worst_oracle:.1e}, {elapsed:.2f} s")
    assert ok


def test_criterion_2_sharpness(report):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = np.inf
    for _ in range(1000):
        N, p = int(rng.integers(1, 5)), float(rng.choice([1.0, 2.0]))
        spec = ClassSpec(1.0, 1.0, N, Interval(2.0))
        f = random_x(rng, spec)
        assert class_membership(f, spec).in_x
        worst = min(worst, wasserstein(f, p).value * N - 2.0 ** (-1 - 1 / p))
    equality = 0.0
    for N in range(1, 5):
        for p in (1, 2):
            f_star = minimize_interval(ClassSpec(1.0, 1.0, N, Interval(2.0)), p).f_star
            equality = max(equality, abs(wasserstein(f_star, p).value * N - 2.0 ** (-1 - 1 / p)))
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-8 and equality <= 1e-8 and elapsed < 30
    report(2, ok, f"min slack {worst:.2e}, equality gap {equality:.1e}, {elapsed:.2f} s")
    assert ok


def test_criterion_3_circle_equivalence(report):
    worst_min = 0.0
    for N in (2, 4, 6):
        for p in (1, 2):
            value = minimize_circle(ClassSpec(1.0, 1.0, N, Circle()), p).value
            worst_min = max(worst_min, abs(value - interval_formula(1.0, 1.0, N, p)))
    rng = np.random.default_rng(3)
    worst_rot = 0.0
    for _ in range(200):
        f = random_balanced(rng, Circle(), int(rng.integers(2, 10)))
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        w = wasserstein(f, p).value
        w_rot = wasserstein(f.rotated(float(rng.uniform(0, 2 * np.pi))), p).value
        worst_rot = max(worst_rot, abs(w_rot - w) / w)
    ok = worst_min <= 1e-10 and worst_rot <= 1e-9
    report(3, ok, f"minimum err {worst_min:.1e}, rotation rel err {worst_rot:.1e}")
    assert ok


def test_criterion_4_even_star(report, even_star_runs):
    worst_cf, worst_num, worst_oracle, d2_exact = 0.0, 0.0, 0.0, True
    for D, N, p, spec, closed, numeric, oracle in even_star_runs:
        expected = even_star_formula(1.0, 1.0, N, D, p)
        worst_cf = max(worst_cf, abs(closed.value - expected) / expected)
        worst_num = max(worst_num, abs(numeric.value - expected) / expected)
        worst_oracle = max(worst_oracle, abs(oracle.value - expected))
        if D == 2:
            interval = minimize_interval(ClassSpec(1.0, 1.0, N, Interval(2.0)), p).value
            d2_exact &= closed.value == interval
    ok = worst_cf <= 1e-12 and worst_num <= 1e-7 and worst_oracle <= 3 * STAR_H and d2_exact
    report(4, ok, f"closed form {worst_cf:.1e}, numeric {worst_num:.1e}, oracle {worst_oracle:.1e}, D=2 exact {d2_exact}")
    assert ok


def test_criterion_5_odd_star(report, odd_star_runs):
    worst_cf, worst_num, worst_oracle = 0.0, 0.0, 0.0
    for D, N, spec, closed, numeric, oracle in odd_star_runs:
        expected = odd_star_formula(1.0, 1.0, N, D)
        worst_cf = max(worst_cf, abs(closed.value - expected) / expected)
        worst_num = max(worst_num, abs(numeric.value - expected) / expected)
        worst_oracle = max(worst_oracle, abs(oracle.value - expected))
    sandwich = all(
        1 / (2 * (D + 1)) <= odd_star_formula(1.0, 1.0, 1, D) <= 1 / (2 * (D - 1)) for D in (3, 5, 7, 9, 11)
    )
    ok = worst_cf <= 1e-12 and worst_num <= 1e-7 and worst_oracle <= 3 * STAR_H and sandwich
    report(5, ok, f"closed form {worst_cf:.1e}, numeric {worst_num:.1e}, oracle {worst_oracle:.1e}, sandwich {sandwich}")
    assert ok


def test_criterion_6_short_edge(report):
    ok_rows, worst_num = True, 0.0
    for N in (1, 2):
        rows = sweep_beta_rows(N, 21)
        col = [r[1] for r in rows]
        ok_rows &= abs(col[0] - interval_formula(1.0, 1.0, N, 1)) <= 1e-10
        ok_rows &= abs(col[-1] - odd_star_formula(1.0, 1.0, N, 3)) <= 1e-10
        ok_rows &= all(b < a for a, b in zip(col, col[1:]))
        for beta in np.linspace(0.0, 1.0 / (3 * N + 1), 6)[1:]:
            res = minimize_star_numeric(ClassSpec(1.0, 1.0, N, Star((2.0, 2.0, float(beta)))), 1)
            expected = d3_short_formula(1.0, 1.0, N, beta)
            worst_num = max(worst_num, abs(res.value - expected) / expected)
    ok = ok_rows and worst_num <= 1e-6
    report(6, ok, f"sweep rows {ok_rows}, numeric rel err {worst_num:.1e}")
    assert ok


def test_criterion_7_reduction_monotonicity(report):
    rng = np.random.default_rng(7)
    worst, outside, strict, adjacent = np.inf, 0, 0, 0
    for _ in range(1000):
        spec = random_spec(rng, "interval")
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        f = random_x(rng, spec)
        conc = concentrate_to_steps(f, p)
        worst = min(worst, conc.input_cost - conc.output_cost)
        if not class_membership(f, spec).in_xs:
            outside += 1
            strict += conc.output_cost < conc.input_cost
        g = shift_to_adjacent(conc.output, p).output
        adjacent += adjacency_predicate(wasserstein(g, p).plan, effective_nodal_set(g))
    ok = worst >= -1e-10 and strict == outside and adjacent == 1000
    report(7, ok, f"min decrease {worst:.1e}, strict {strict}/{outside} outside X_s, adjacent {adjacent}/1000")
    assert ok


def test_criterion_8_fold_equivalence(report, fold_runs):
    worst = max(abs(fold - oracle.value) for _, _, fold, oracle in fold_runs)
    ok = worst <= 6e-3
    report(8, ok, f"{len(fold_runs)} solves, worst |fold - oracle| {worst:.1e}")
    assert ok


def test_criterion_9_plan_legality(report, even_star_runs, odd_star_runs, fold_runs):
    plans = [(r[3].domain, r[6].plan) for r in even_star_runs]
    plans += [(r[2].domain, r[5].plan) for r in odd_star_runs]
    plans += [(f.domain, oracle.plan) for f, _, _, oracle in fold_runs]
    violations = sum(len(check_plan_monotonicity(plan, domain)) for domain, plan in plans)
    ok = violations == 0
    report(9, ok, f"{violations} violations over {len(plans)} plans")
    assert ok


def test_criterion_10_oracle_self_consistency(report):
    rng = np.random.default_rng(10)
    worst, errors = 0.0, 0
    for _ in range(500):
        m, n = int(rng.integers(1, 501)), int(rng.integers(1, 501))
        a, b = rng.uniform(0.05, 1.0, m), rng.uniform(0.05, 1.0, n)
        b *= a.sum() / b.sum()
        plus = Atoms(np.zeros(m, dtype=int), rng.uniform(0, 1, m), a)
        minus = Atoms(np.zeros(n, dtype=int), rng.uniform(0, 1, n), b)
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        ref, _ = sorted_line_ot(plus, minus, p)
        try:
            got = solve_discrete_ot(DiscreteMeasurePair(plus, minus, 1.0), Interval(1.0), p, presort=False).value
        except SolverError:
            errors += 1
            continue
        worst = max(worst, abs(got - ref) / max(1.0, ref))
    ok = worst <= 1e-12 and errors == 0
    report(10, ok, f"worst diff {worst:.1e}, solver errors {errors}")
    assert ok
