"""Cost-decreasing transformations towards minimizer structure.

``concentrate_to_steps`` re-lays the mass of every transported chunk as a
block of height ``c_inf`` next to the first nodal point its path crosses
(sources) or the last one (targets). Each unit of mass then travels a
sub-path of its old path, so the cost cannot increase.

``shift_to_adjacent`` replaces an X_s function by balanced antisymmetric
bumps, one per nodal point, whose half-width is the mass that first crosses
that nodal point divided by ``c_inf``. Units crossing a nodal point have
density at most ``c_inf`` on both sides of it, so their share of the old cost
is at least the cost of the new bump; the new plan only crosses single nodal
points.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .domain import TWO_PI, VERTEX, Circle, Domain, Interval, Star
from .errors import PreconditionError, StepFunctionError, UnsupportedCaseError
from .plan import TransportPlan
from .step import NodalSet, StepFunction, class_membership, effective_nodal_set, ClassSpec
from .transport import wasserstein

PATH_TOL = 1e-12
# moves lighter than this fraction of the plan mass are rounding slivers of the cut search
SLIVER_RTOL = 1e-10
COST_SLACK = 1e-10


class IntervalStep(NamedTuple):
    """Mass of sub-interval ``index`` moved across its left and right nodal endpoints."""

    index: int
    left: float
    right: float


class ShiftStep(NamedTuple):
    """Mass carried across nodal point ``nodal_index`` by the rebuilt bump."""

    nodal_index: int
    mass: float


class BlockStep(NamedTuple):
    """Mass placed next to nodal point ``nodal_index`` on ``side`` (edge index at the vertex, -1/+1 elsewhere)."""

    nodal_index: int
    side: int
    mass: float


@dataclass(frozen=True, eq=False)
class ReductionReport:
    input_cost: float
    output_cost: float
    output: StepFunction
    steps: list = field(default_factory=list)
    adjacent: Optional[bool] = None

    @property
    def changed(self) -> bool:
        return bool(self.steps) and self.output_cost < self.input_cost

    def to_json(self) -> dict:
        return {
            "input_cost": self.input_cost,
            "output_cost": self.output_cost,
            "steps": [list(s) for s in self.steps],
            "adjacent": self.adjacent,
            "output": self.output.to_json(),
        }


# -- paths and nodal crossings -------------------------------------------------------


def _circle_delta(x: float, y: float) -> float:
    """Signed shortest displacement from ``x`` to ``y`` on the circle, in ``(-pi, pi]``."""
    d = (y - x) % TWO_PI
    return d - TWO_PI if d > math.pi else d


def crossed_nodal_points(nodal: NodalSet, src_edge: int, x: float, dst_edge: int, y: float) -> list[tuple[int, int, int]]:
    """Nodal points strictly inside the geodesic from ``(src_edge, x)`` to ``(dst_edge, y)``, in path order.

    Each entry is ``(index, source_side, target_side)``: the side of the
    nodal point on which the source, respectively the target, lies. Sides
    are -1/+1 (smaller/larger coordinate) except at the star vertex, where
    the side is the edge index.
    """
    domain = nodal.domain
    pts = nodal.points
    hits = []
    if isinstance(domain, Interval):
        step = 1 if y > x else -1
        for i, q in enumerate(pts):
            z = q.point.coord
            if min(x, y) + PATH_TOL < z < max(x, y) - PATH_TOL:
                hits.append((abs(z - x), i, -step, step))
    elif isinstance(domain, Circle):
        delta = _circle_delta(x, y)
        step = 1 if delta > 0 else -1
        for i, q in enumerate(pts):
            along = ((q.point.coord - x) * step) % TWO_PI
            if PATH_TOL < along < abs(delta) - PATH_TOL:
                hits.append((along, i, -step, step))
    else:
        for i, q in enumerate(pts):
            e, z = q.point
            if q.point == VERTEX:
                if src_edge != dst_edge:
                    hits.append((x, i, src_edge, dst_edge))
                continue
            if src_edge == dst_edge:
                if e == src_edge and min(x, y) + PATH_TOL < z < max(x, y) - PATH_TOL:
                    step = 1 if y > x else -1
                    hits.append((abs(z - x), i, -step, step))
            elif e == src_edge and z < x - PATH_TOL:
                hits.append((x - z, i, 1, -1))
            elif e == dst_edge and z < y - PATH_TOL:
                hits.append((x + z, i, -1, 1))
    hits.sort()
    return [(i, s, t) for _, i, s, t in hits]


def _moves(plan: TransportPlan):
    """``(src_edge, src_mid, dst_edge, dst_mid, mass)`` rows without rounding slivers."""
    keep = plan.mass > SLIVER_RTOL * plan.total_mass
    return zip(
        plan.src_edge[keep].tolist(),
        plan.src_mid[keep].tolist(),
        plan.dst_edge[keep].tolist(),
        plan.dst_mid[keep].tolist(),
        plan.mass[keep].tolist(),
    )


def adjacency_predicate(plan: TransportPlan, nodal: NodalSet) -> bool:
    """True iff every move of ``plan`` crosses exactly one nodal point."""
    for a, x, b, y, _ in _moves(plan):
        if len(crossed_nodal_points(nodal, a, x, b, y)) != 1:
            return False
    return True


# -- concentration -------------------------------------------------------------------------


def _block(domain: Domain, nodal: NodalSet, index: int, side: int, length: float) -> tuple:
    e, z = nodal.points[index].point
    if isinstance(domain, Star):
        if nodal.points[index].point == VERTEX:
            e, lo, hi = side, 0.0, length
        elif side < 0:
            lo, hi = z - length, z
        else:
            lo, hi = z, z + length
        if lo < -PATH_TOL or hi > domain.edges[e] + PATH_TOL:
            raise UnsupportedCaseError(f"a block of length {length} next to nodal point {index} leaves edge {e}")
        return e, max(lo, 0.0), min(hi, domain.edges[e])
    if isinstance(domain, Interval):
        lo, hi = (z - length, z) if side < 0 else (z, z + length)
        return 0, max(lo, 0.0), min(hi, domain.length)
    return (0, z - length, z) if side < 0 else (0, z, z + length)


def _component_steps(domain: Domain, nodal: NodalSet, blocks: dict) -> list[IntervalStep]:
    """Per sub-interval masses next to its left and right nodal endpoints (interval and circle)."""
    n = len(nodal)
    out = []
    if isinstance(domain, Interval):
        for j in range(n + 1):
            left = blocks.get((j - 1, 1), 0.0) if j > 0 else 0.0
            right = blocks.get((j, -1), 0.0) if j < n else 0.0
            out.append(IntervalStep(j, left, right))
    else:
        for j in range(n):
            out.append(IntervalStep(j, blocks.get((j, 1), 0.0), blocks.get(((j + 1) % n, -1), 0.0)))
    return out


def concentrate_to_steps(f: StepFunction, p: float, h: float | None = None) -> ReductionReport:
    """Move every transported chunk next to the nodal point it crosses first (sources) or last (targets).

    Raises
    ------
    PreconditionError
        If ``f`` has no nodal points.
    UnsupportedCaseError
        On a star, if a block does not fit on the edge of its nodal point.
    """
    nodal = effective_nodal_set(f)
    if len(nodal) == 0:
        raise PreconditionError("f has no nodal points")
    _, c_inf, _ = f.norms()
    res = wasserstein(f, p, h)
    blocks: dict = defaultdict(float)
    signs: dict = {}
    plan = res.plan
    for a, x, b, y, m in _moves(plan):
        path = crossed_nodal_points(nodal, a, x, b, y)
        if not path:
            raise PreconditionError(f"a move from ({a}, {x}) to ({b}, {y}) crosses no nodal point")
        first, src_side, _ = path[0]
        last, _, dst_side = path[-1]
        blocks[(first, src_side)] += m
        signs[(first, src_side)] = 1.0
        blocks[(last, dst_side)] += m
        signs[(last, dst_side)] = -1.0
    # spread the mass of dropped slivers so both parts keep their totals
    scale = 2 * plan.total_mass / sum(blocks.values())
    blocks = defaultdict(float, {k: v * scale for k, v in blocks.items()})
    if isinstance(f.domain, (Interval, Circle)):
        steps = _component_steps(f.domain, nodal, blocks)
    else:
        steps = [BlockStep(i, s, m) for (i, s), m in sorted(blocks.items())]
    l1 = f.norms()[0]
    if class_membership(f, ClassSpec(c_inf, l1, len(nodal), f.domain)).in_xs:
        return ReductionReport(res.value, res.value, f, steps)
    g = _assemble(f.domain, nodal, blocks, signs, c_inf)
    out_cost = wasserstein(g, p, h).value
    bare = _bare_sides(f.domain, nodal, blocks)
    if bare:
        g, out_cost = _cover_bare_sides(f, p, h, nodal, blocks, signs, bare, res.value, out_cost)
    return ReductionReport(res.value, out_cost, g, steps)


def _assemble(domain: Domain, nodal: NodalSet, blocks: dict, signs: dict, c_inf: float) -> StepFunction:
    pieces = []
    for key in sorted(blocks):
        mass = blocks[key]
        if mass <= 0:
            continue
        e, lo, hi = _block(domain, nodal, key[0], key[1], mass / c_inf)
        pieces.append((e, lo, hi, signs[key] * mass / (hi - lo) if hi > lo else 0.0))
    try:
        return StepFunction(domain, pieces)
    except StepFunctionError as exc:
        raise UnsupportedCaseError(f"concentrated blocks overlap: {exc}") from exc


def _components(domain: Domain, nodal: NodalSet) -> list[list[tuple[int, int]]]:
    """Components of the domain minus the nodal set, each as its ``(nodal index, side)`` boundary keys."""
    n = len(nodal)
    if isinstance(domain, Interval):
        return [[(0, -1)]] + [[(i, 1), (i + 1, -1)] for i in range(n - 1)] + [[(n - 1, 1)]]
    if isinstance(domain, Circle):
        return [[(i, 1), ((i + 1) % n, -1)] for i in range(n)]
    vertex = next((i for i, q in enumerate(nodal.points) if q.point == VERTEX), None)
    comps, central = [], []
    for e in range(domain.degree):
        on_edge = sorted(
            (q.point.coord, i) for i, q in enumerate(nodal.points) if q.point != VERTEX and q.point.edge == e
        )
        inner = [(vertex, e)] if vertex is not None else []
        if on_edge:
            inner.append((on_edge[0][1], -1))
            comps += [[(a, 1), (b, -1)] for (_, a), (_, b) in zip(on_edge[:-1], on_edge[1:])]
            comps.append([(on_edge[-1][1], 1)])
        if vertex is not None:
            comps.append(inner)
        else:
            central += inner
    if central:
        comps.append(central)
    return comps


def _bare_sides(domain: Domain, nodal: NodalSet, blocks: dict) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Boundary keys without a block in components that carry mass, each with a donor key of the same component."""
    out = []
    for comp in _components(domain, nodal):
        filled = [k for k in comp if blocks.get(k, 0.0) > 0]
        if not filled:
            continue
        donor = max(filled, key=lambda k: blocks[k])
        out += [(k, donor) for k in comp if blocks.get(k, 0.0) <= 0]
    return out


def _cover_bare_sides(f, p, h, nodal, blocks, signs, bare, in_cost, out_cost):
    """Give every bare nodal side a small block taken from its component, keeping the cost below ``in_cost``.

    Blocks placed by first and last crossing can leave a nodal point that is
    only crossed in transit with no mass next to it, which turns it into a
    zero plateau. Moving a little mass there restores a sign change at the
    same location; the share is halved until the cost stays below the input
    cost.
    """
    _, c_inf, _ = f.norms()
    gap = in_cost - out_cost
    if gap <= 0:
        raise UnsupportedCaseError("no cost margin to restore the nodal points crossed in transit")
    share = 0.25
    for _ in range(60):
        moved = dict(blocks)
        moved_signs = dict(signs)
        for key, donor in bare:
            delta = share * blocks[donor] / (1 + sum(1 for _, d in bare if d == donor))
            moved[donor] -= delta
            moved[key] = moved.get(key, 0.0) + delta
            moved_signs[key] = signs[donor]
        g = _assemble(f.domain, nodal, moved, moved_signs, c_inf)
        cost = wasserstein(g, p, h).value
        if cost <= out_cost + 0.5 * gap:
            return g, cost
        share *= 0.5
    raise UnsupportedCaseError("could not restore the nodal points crossed in transit")


# -- adjacency shift -------------------------------------------------------------------------


def _bump_layout(coords, widths, first_signs, length: float, c_inf: float, pinned: bool = False):
    """Balanced bumps of half-width ``widths[i]`` near ``coords[i]``, packed in order inside ``[0, length]``.

    A zero width makes the neighbouring bumps touch, so their junction keeps
    the sign change. With ``pinned`` the first and last groups touch the two
    ends, which meet when ``[0, length]`` is an unrolled circle.
    Returns pieces ``(start, end, value)``.
    """
    groups, cur, joined = [], [], False
    for i, w in enumerate(widths):
        if w <= 0:
            joined = True
            continue
        if cur and not joined:
            groups.append(cur)
            cur = []
        cur.append(i)
        joined = False
    if cur:
        groups.append(cur)
    if not groups:
        raise PreconditionError("no mass crosses any nodal point")
    sizes = np.array([2.0 * sum(widths[i] for i in g) for g in groups])
    starts = np.array([coords[g[0]] - widths[g[0]] for g in groups], dtype=float)
    if pinned:
        if len(groups) == 1:
            raise UnsupportedCaseError("a single bump group cannot close the cut")
        starts[0] = 0.0
        starts[-1] = length - sizes[-1]
    for k in range(1, len(starts)):
        starts[k] = max(starts[k], starts[k - 1] + sizes[k - 1])
    starts[0] = max(starts[0], 0.0)
    for k in range(len(starts) - 1, -1, -1):
        hi = length if k == len(starts) - 1 else starts[k + 1]
        starts[k] = min(starts[k], hi - sizes[k])
    if starts[0] < -PATH_TOL * max(1.0, length):
        raise PreconditionError("bumps do not fit in the domain")
    pieces = []
    for g, x in zip(groups, starts):
        x = max(float(x), 0.0)
        for i in g:
            w = widths[i]
            pieces.append((x, x + w, first_signs[i] * c_inf))
            pieces.append((x + w, x + 2 * w, -first_signs[i] * c_inf))
            x += 2 * w
    return pieces


def _first_crossing_masses(f: StepFunction, nodal: NodalSet, plan: TransportPlan) -> np.ndarray:
    masses = np.zeros(len(nodal))
    for a, x, b, y, m in _moves(plan):
        path = crossed_nodal_points(nodal, a, x, b, y)
        masses[path[0][0]] += m
    return masses


def _left_signs(f: StepFunction, nodal: NodalSet) -> np.ndarray:
    """Sign of ``f`` just before each nodal point (the sign of the last signed piece before it)."""
    out = []
    for q in nodal:
        z = q.point.coord
        before = [pc.value for pc in f.pieces if pc.end <= z + PATH_TOL and pc.value != 0.0]
        if not before and isinstance(f.domain, Circle):
            before = [pc.value for pc in f.pieces if pc.value != 0.0]
        out.append(1.0 if before and before[-1] > 0 else -1.0)
    return np.array(out)


def _shift_once(f: StepFunction, p: float, res) -> StepFunction:
    """One re-layout of ``f`` from its optimal plan ``res`` (already known to be non-adjacent)."""
    nodal = effective_nodal_set(f)
    _, c_inf, _ = f.norms()
    crossing = _first_crossing_masses(f, nodal, res.plan)
    widths = crossing * (res.plan.total_mass / crossing.sum()) / c_inf
    signs = _left_signs(f, nodal)
    coords = nodal.coords()
    if isinstance(f.domain, Interval):
        pieces = _bump_layout(coords, widths, signs, f.domain.length, c_inf)
        return StepFunction(f.domain, [(0, a, b, v) for a, b, v in pieces])
    # unroll the circle at the cut, which no mass crosses
    cut = res.cut
    rel = (coords - cut) % TWO_PI
    rel = np.where(rel > TWO_PI - PATH_TOL, 0.0, rel)
    order = np.argsort(rel, kind="stable")
    rel, widths, signs = rel[order], widths[order], signs[order]
    pinned = bool(rel[0] <= PATH_TOL or widths[0] <= 0 or widths[-1] <= 0)
    pieces = _bump_layout(rel, widths, signs, TWO_PI, c_inf, pinned)
    return StepFunction(f.domain, [(0, a + cut, b + cut, v) for a, b, v in pieces])


MAX_CIRCLE_ROUNDS = 50


def _require_xs(f: StepFunction):
    l1, c_inf, _ = f.norms()
    nodal = effective_nodal_set(f)
    if l1 == 0 or len(nodal) == 0:
        raise PreconditionError("f must be nonzero with at least one nodal point")
    spec = ClassSpec(c_inf, l1, len(nodal), f.domain)
    membership = class_membership(f, spec)
    if not membership.in_xs:
        raise PreconditionError(f"f is not a step function of the reduced class: {'; '.join(membership.reasons)}")


def shift_to_adjacent(f: StepFunction, p: float) -> ReductionReport:
    """Rebuild an X_s function so its optimal plan only crosses single nodal points.

    Each nodal point gets a balanced bump carrying the mass that first
    crosses it. On the circle the layout is built on the line unrolled at the
    optimal cut; the circle plan of the result can wrap differently, so the
    step repeats (each round lowers the cost) until the plan is adjacent or
    ``MAX_CIRCLE_ROUNDS`` is reached, which ``report.adjacent`` records.
    Functions whose plan is already adjacent are returned as is.

    Raises
    ------
    PreconditionError
        If ``f`` is not in X_s.
    UnsupportedCaseError
        On star graphs, or when a circle layout cannot keep every nodal point.
    """
    if isinstance(f.domain, Star):
        raise UnsupportedCaseError("the adjacency shift is implemented on the interval and the circle")
    _require_xs(f)
    n_nodal = len(effective_nodal_set(f))
    before = wasserstein(f, p)
    g, res = f, before
    rounds = 1 if isinstance(f.domain, Interval) else MAX_CIRCLE_ROUNDS
    for _ in range(rounds):
        if adjacency_predicate(res.plan, effective_nodal_set(g)):
            break
        g = _shift_once(g, p, res)
        if len(effective_nodal_set(g)) != n_nodal:
            raise UnsupportedCaseError("the rebuilt function lost a nodal point")
        res = wasserstein(g, p)
    adjacent = adjacency_predicate(res.plan, effective_nodal_set(g))
    nodal = effective_nodal_set(g)
    steps = [] if g is f else [ShiftStep(i, m) for i, m in enumerate(_first_crossing_masses(g, nodal, res.plan).tolist())]
    return ReductionReport(before.value, res.value, g, steps, adjacent)
