from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import circle_fn, interval_fn, star_fn
from nodalot import (
    Circle,
    ClassSpec,
    InfeasibleSpecError,
    Interval,
    ParityError,
    Star,
    StepFunction,
    StepFunctionError,
    class_membership,
    effective_nodal_set,
)
from nodalot.domain import TWO_PI, VERTEX
from nodalot.sampling import random_balanced, random_spec, random_x, random_xs
from nodalot.step import NodalKind, Verdict


@pytest.mark.parametrize(
    "f, expected",
    [
        (interval_fn(1, (0, 0.5, 1), (0.5, 1, -1)), (1.0, 1.0, 0.0)),
        (StepFunction.zero(Interval(2.0)), (0.0, 0.0, 0.0)),
        (interval_fn(1, (0, 0.4, 0.5), (0.5, 0.7, -1)), (0.4, 1.0, 0.0)),
    ],
)
def test_norms(f, expected):
    assert f.norms() == pytest.approx(expected, abs=1e-15)


def test_normalization_fills_and_merges():
    f = interval_fn(2, (0.5, 1.0, 1.0), (1.0, 1.5, 1.0))
    assert [(p.start, p.end, p.value) for p in f.pieces] == [(0.0, 0.5, 0.0), (0.5, 1.5, 1.0), (1.5, 2.0, 0.0)]


@pytest.mark.parametrize(
    "pieces",
    [[(0, 0.0, 0.6, 1.0), (0, 0.5, 1.0, -1.0)], [(0, 0.0, 1.5, 1.0)], [(1, 0.0, 0.5, 1.0)], [(0, 0.0, 0.5, math.nan)]],
)
def test_invalid_pieces(pieces):
    with pytest.raises(StepFunctionError):
        StepFunction(Interval(1.0), pieces)


def test_circle_pieces_wrap_past_two_pi():
    f = circle_fn((TWO_PI - 0.1, TWO_PI + 0.2, 1.0), (1.0, 1.3, -1.0))
    assert f(0, 0.1) == 1.0 and f(0, TWO_PI - 0.05) == 1.0 and f(0, 1.1) == -1.0
    assert f.norms()[2] == pytest.approx(0.0, abs=1e-12)


def test_evaluation_is_right_continuous():
    f = interval_fn(1, (0, 0.5, 1), (0.5, 1, -1))
    assert f(0, 0.5) == -1.0 and f(0, 0.49) == 1.0


def test_json_round_trip():
    f = star_fn((1, 2, 0.5), (0, 0, 0.4, 1.0), (1, 0.1, 0.3, -2.0), (2, 0.0, 0.5, 0.25))
    assert StepFunction.from_json(f.to_json()) == f


@pytest.mark.parametrize("data", [{"pieces": []}, {"domain": {"kind": "interval", "length": 1}, "pieces": [[0, 0, 1]]}])
def test_malformed_json(data):
    with pytest.raises(StepFunctionError):
        StepFunction.from_json(data)


def _unit_pieces(values):
    return interval_fn(len(values), *[(i, i + 1, v) for i, v in enumerate(values)])


def test_nodal_set_with_plateau():
    nodal = effective_nodal_set(_unit_pieces([1, 0, 1, -1, 0, -1, 0, 1]))
    assert [(p.point.coord, p.kind) for p in nodal] == [(3.0, NodalKind.Z1), (6.0, NodalKind.Z2)]


def test_nodal_set_single_change():
    nodal = effective_nodal_set(interval_fn(1, (0, 0.5, 1), (0.5, 1, -1)))
    assert [(p.point.coord, p.kind) for p in nodal] == [(0.5, NodalKind.Z1)]


def test_plateau_between_equal_signs_is_not_nodal():
    assert len(effective_nodal_set(interval_fn(3, (0, 1, 1), (2, 3, 1)))) == 0


def test_circle_nodal_count_is_even():
    f = circle_fn((0.0, 1.0, 1.0), (1.0, 2.0, -1.0), (3.0, 4.0, 1.0), (4.0, 5.0, -1.0))
    nodal = effective_nodal_set(f)
    assert len(nodal) == 4
    assert sorted(p.kind for p in nodal).count(NodalKind.Z2) == 2


def test_circle_nodal_point_at_origin():
    f = circle_fn((TWO_PI - 0.5, TWO_PI, 1.0), (0.0, 0.5, -1.0), (2.0, 3.0, 0.0))
    locs = {round(p.point.coord, 12) for p in effective_nodal_set(f)}
    assert 0.0 in locs


def test_star_vertex_sign_change():
    f = star_fn((1, 1, 1), (0, 0, 0.4, 1.0), (1, 0, 0.2, -1.0), (2, 0, 0.2, -1.0))
    nodal = effective_nodal_set(f)
    assert nodal.locations == [VERTEX] and nodal.points[0].kind is NodalKind.Z1


def test_star_vertex_zero_component_is_represented_by_vertex():
    f = star_fn((1, 1, 1), (0, 0.1, 0.4, 1.0), (1, 0.2, 0.5, -1.0))
    nodal = effective_nodal_set(f)
    assert nodal.locations == [VERTEX] and nodal.points[0].kind is NodalKind.Z2


def test_star_interior_points():
    f = star_fn((2, 2, 2), (0, 0.0, 0.5, 1.0), (0, 0.5, 1.0, -1.0), (1, 0.0, 0.5, -1.0), (2, 0, 0.5, 1.0), (2, 0.5, 1.0, -1.0))
    coords = sorted((p.point.edge, p.point.coord) for p in effective_nodal_set(f))
    assert (0, 0.5) in coords and (2, 0.5) in coords and len(coords) == 3


@pytest.mark.parametrize(
    "f, spec, verdict",
    [
        (interval_fn(1, (0.25, 0.5, 1), (0.5, 0.75, -1)), ClassSpec(1, 0.5, 1, Interval(1)), Verdict.IN_XS),
        (interval_fn(2, (0, 1, 0.5), (1, 2, -0.5)), ClassSpec(1, 1, 1, Interval(2)), Verdict.NOT_IN_X),
        (interval_fn(1, (0, 0.3, 1), (0.3, 0.5, -1)), ClassSpec(1, 0.5, 1, Interval(1)), Verdict.NOT_IN_X),
        (interval_fn(1, (0, 0.2, 0.5), (0.2, 0.4, 1), (0.4, 0.7, -1)), ClassSpec(1, 0.6, 1, Interval(1)), Verdict.IN_X),
        (interval_fn(1, (0, 0.2, 1), (0.3, 0.5, -1)), ClassSpec(1, 0.4, 1, Interval(1)), Verdict.IN_X),
    ],
)
def test_class_membership(f, spec, verdict):
    assert class_membership(f, spec).verdict is verdict


def test_membership_reasons_name_the_mismatch():
    m = class_membership(interval_fn(2, (0, 1, 0.5), (1, 2, -0.5)), ClassSpec(1, 1, 1, Interval(2)))
    assert any("sup norm" in r for r in m.reasons)
    m = class_membership(interval_fn(1, (0, 0.3, 1), (0.3, 0.5, -1)), ClassSpec(1, 0.5, 1, Interval(1)))
    assert any("integral" in r for r in m.reasons)


@pytest.mark.parametrize(
    "args",
    [(0, 1, 1, Interval(1)), (1, -1, 1, Interval(1)), (1, 1, 0, Interval(1)), (1, 1.5, 1, Interval(1)), (1, TWO_PI + 0.1, 2, Circle())],
)
def test_infeasible_specs(args):
    with pytest.raises(InfeasibleSpecError):
        ClassSpec(*args)


def test_circle_parity():
    with pytest.raises(ParityError):
        ClassSpec(1, 1, 3, Circle()).require_even_on_circle()


@pytest.mark.parametrize("kind", ["interval", "circle"])
@given(seed=st.integers(0, 2**32 - 1))
def test_sampled_functions_have_exact_class(kind, seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, kind)
    assert class_membership(random_xs(rng, spec), spec).in_xs
    assert class_membership(random_x(rng, spec), spec).in_x


@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 10))
def test_nodal_set_invariant_under_scaling(seed, scale):
    f = random_balanced(np.random.default_rng(seed), Interval(2.0))
    assert effective_nodal_set(f.scaled(scale)).locations == effective_nodal_set(f).locations


@given(seed=st.integers(0, 2**32 - 1))
def test_nodal_set_under_negation_and_reflection(seed):
    f = random_balanced(np.random.default_rng(seed), Interval(2.0))
    n = len(effective_nodal_set(f))
    assert effective_nodal_set(-f).locations == effective_nodal_set(f).locations
    assert len(effective_nodal_set(f.reflected())) == n


@given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0, TWO_PI))
def test_circle_nodal_count_invariant_under_rotation(seed, theta):
    f = random_balanced(np.random.default_rng(seed), Circle())
    assert len(effective_nodal_set(f.rotated(theta))) == len(effective_nodal_set(f))


@given(seed=st.integers(0, 2**32 - 1))
def test_addition_and_subtraction(seed):
    rng = np.random.default_rng(seed)
    f, g = random_balanced(rng, Star((1.0, 2.0, 0.5))), random_balanced(rng, Star((1.0, 2.0, 0.5)))
    assert ((f + g) - g).allclose(f, 1e-12)
    assert (f + g).norms()[2] == pytest.approx(0.0, abs=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
def test_positive_and_negative_parts(seed):
    f = random_balanced(np.random.default_rng(seed), Interval(1.0))
    assert (f.positive_part() - f.negative_part()).allclose(f)
    assert f.masses() == pytest.approx((f.positive_part().norms()[0], f.negative_part().norms()[0]))
