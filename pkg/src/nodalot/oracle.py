"""Brute-force discrete optimal transport used as an independent reference.

A step function is discretized into atoms at the midpoints of cells of length
at most ``h``; the finite transportation problem with geodesic cost is solved
exactly by the transportation simplex in :mod:`nodalot._simplex`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _simplex
from .domain import Circle, Domain, Interval, Star, distance_matrix
from .errors import DegenerateError, ImbalanceError, InvalidInputError, SolverError
from .line import BALANCE_RTOL, check_p
from .plan import TransportPlan
from .step import StepFunction

LINE_AGREEMENT = 1e-12
PRICE_RTOL = 1e-13
PERTURB_RTOL = 1e-9
FLOW_RTOL = 1e-13


class Atoms(NamedTuple):
    edge: np.ndarray
    coord: np.ndarray
    mass: np.ndarray

    @classmethod
    def empty(cls) -> "Atoms":
        return cls(np.zeros(0, dtype=int), np.zeros(0), np.zeros(0))

    def __len__(self) -> int:
        return len(self.mass)

    @property
    def total(self) -> float:
        return float(np.sum(self.mass))

    def permuted(self, order) -> "Atoms":
        return Atoms(self.edge[order], self.coord[order], self.mass[order])


@dataclass(frozen=True, eq=False)
class DiscreteMeasurePair:
    plus: Atoms
    minus: Atoms
    h: float


class SimplexSolution(NamedTuple):
    rows: np.ndarray
    cols: np.ndarray
    flow: np.ndarray
    u: np.ndarray
    v: np.ndarray
    iterations: int
    bland_pivots: int


class OracleResult(NamedTuple):
    value: float
    plan: TransportPlan
    min_reduced_cost: float
    iterations: int


def default_grid_step(f: StepFunction) -> float:
    l1, linf, _ = f.norms()
    if linf == 0:
        raise DegenerateError("the function vanishes identically")
    return 1e-3 * l1 / linf


def discretize(f: StepFunction, h: float) -> DiscreteMeasurePair:
    """Split each piece into equal cells of length at most ``h`` with an atom at each midpoint.

    The lighter side is rescaled so the two totals agree.
    """
    if not (math.isfinite(h) and h > 0):
        raise InvalidInputError(f"grid step must be positive, got {h!r}")
    sides = {1: [], -1: []}
    for q in f.pieces:
        if q.value == 0.0:
            continue
        n = max(1, math.ceil(q.length / h - 1e-9))
        width = q.length / n
        mids = q.start + width * (np.arange(n) + 0.5)
        sides[1 if q.value > 0 else -1].append((np.full(n, q.edge), mids, np.full(n, abs(q.value) * width)))

    def pack(rows) -> Atoms:
        if not rows:
            return Atoms.empty()
        e, x, m = (np.concatenate(col) for col in zip(*rows))
        return Atoms(e.astype(int), x, m)

    plus, minus = pack(sides[1]), pack(sides[-1])
    mp, mn = plus.total, minus.total
    if abs(mp - mn) > BALANCE_RTOL * (mp + mn):
        raise ImbalanceError(f"positive mass {mp!r} differs from negative mass {mn!r}")
    if mp > 0 and mn > 0:
        if mp < mn:
            plus = Atoms(plus.edge, plus.coord, plus.mass * (mn / mp))
        else:
            minus = Atoms(minus.edge, minus.coord, minus.mass * (mp / mn))
    return DiscreteMeasurePair(plus, minus, float(h))


def transportation_simplex(cost: np.ndarray, a: np.ndarray, b: np.ndarray, basis=None) -> SimplexSolution:
    """Exact solution of ``min <cost, x>`` over couplings of ``a`` and ``b``.

    The simplex runs on marginals perturbed by ``PERTURB_RTOL`` of the mean
    supply, which removes degenerate pivots; the flows of the original
    marginals are then read off the optimal tree. The dual potentials, and
    hence the optimality certificate, depend on the tree only. ``basis``
    optionally warm-starts from a previous ``SimplexSolution``.
    """
    cost = np.ascontiguousarray(cost, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = cost.shape
    total = float(np.sum(a))
    delta = PERTURB_RTOL * total / m
    ap = a + delta
    bp = b.copy()
    bp[-1] += m * delta
    start = None
    if basis is not None:
        ok, flow = _simplex.tree_flows(m, n, basis.rows, basis.cols, ap, bp)
        if ok and np.min(flow) >= 0:
            start = (basis.rows.copy(), basis.cols.copy(), flow)
    if start is None:
        start = _simplex.northwest_corner(ap, bp)
    sol = _run_simplex(cost, ap, bp, *start)
    ok, flow = _simplex.tree_flows(m, n, sol.rows, sol.cols, a, b)
    if ok and np.min(flow) >= -FLOW_RTOL * total:
        return sol._replace(flow=np.maximum(flow, 0.0))
    # the perturbation changed the optimal tree's feasibility: solve the original problem directly
    return _run_simplex(cost, a, b, *_simplex.northwest_corner(a, b))


def _run_simplex(cost, a, b, rows, cols, flow) -> SimplexSolution:
    m, n = cost.shape
    finite = cost[np.isfinite(cost)]
    scale = float(np.max(np.abs(finite))) if finite.size else 1.0
    tol = PRICE_RTOL * max(scale, 1e-300)
    flow_eps = 1e-15 * float(np.sum(a))
    max_iter = 1000 * (m + n) + 100_000
    status, iterations, bland, pot = _simplex.solve(cost, rows, cols, flow, tol, max_iter, flow_eps)
    if status == 1:
        raise SolverError(f"transportation simplex hit the iteration limit ({max_iter})")
    if status == 2:
        raise SolverError("transportation simplex basis is not a spanning tree")
    return SimplexSolution(rows, cols, flow, pot[:m].copy(), pot[m:].copy(), int(iterations), int(bland))


def reduced_costs(cost: np.ndarray, sol: SimplexSolution) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return cost - sol.u[:, None] - sol.v[None, :]


def _atom_plan(pair: DiscreteMeasurePair, rows, cols, flow, dist, p) -> TransportPlan:
    keep = flow > 0
    rows, cols, flow = rows[keep], cols[keep], flow[keep]
    xs, ys = pair.plus.coord[rows], pair.minus.coord[cols]
    return TransportPlan(
        pair.plus.edge[rows], xs, xs, pair.minus.edge[cols], ys, ys, flow, flow * dist[rows, cols] ** p
    )


def line_order_keys(pair: DiscreteMeasurePair, domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Sort keys placing both atom sets on one line, used to seed the initial basis.

    On a star each edge is laid out on the side of the line given by the sign
    of its net mass, so vertex-split data sorts into its fold order.
    """
    if not isinstance(domain, Star):
        return pair.plus.coord, pair.minus.coord
    net = np.zeros(domain.degree)
    np.add.at(net, pair.plus.edge, pair.plus.mass)
    np.add.at(net, pair.minus.edge, -pair.minus.mass)
    side = np.where(net >= 0, 1.0, -1.0)
    return side[pair.plus.edge] * pair.plus.coord, side[pair.minus.edge] * pair.minus.coord


def solve_discrete_ot(
    pair: DiscreteMeasurePair, domain: Domain, p: float, lexicographic: bool = True, presort: bool = True
) -> OracleResult:
    """Exact W_p between the two atom sets with geodesic ground cost.

    For ``p = 1`` optimal plans are typically not unique; with
    ``lexicographic`` the solver then picks, among all optimal plans, one
    minimizing the squared-distance cost, which is the limit of the optimal
    plans for ``p -> 1+``. With ``presort`` the initial basis is the
    northwest corner of the atoms in :func:`line_order_keys` order; otherwise
    the given atom order is used.

    Raises
    ------
    DegenerateError
        If either atom set is empty.
    SolverError
        If the simplex fails, or on the interval if it disagrees with the
        sorting-based solution by more than ``1e-12``.
    """
    p = check_p(p)
    if len(pair.plus) == 0 or len(pair.minus) == 0:
        raise DegenerateError("empty measures")
    if presort:
        kp, km = line_order_keys(pair, domain)
        pair = DiscreteMeasurePair(
            pair.plus.permuted(np.argsort(kp, kind="stable")), pair.minus.permuted(np.argsort(km, kind="stable")), pair.h
        )
    plus, minus = pair.plus, pair.minus
    dist = distance_matrix(domain, plus.edge, plus.coord, minus.edge, minus.coord)
    cost = dist**p
    if presort and isinstance(domain, Circle):
        # optimal circle plans are monotone from some starting target atom on
        k = int(_simplex.best_rotation(cost, plus.mass, minus.mass))
        order = np.roll(np.arange(len(minus)), -k)
        minus = minus.permuted(order)
        pair = DiscreteMeasurePair(plus, minus, pair.h)
        dist, cost = dist[:, order], cost[:, order]
    sol = transportation_simplex(cost, plus.mass, minus.mass)
    certificate = float(np.min(reduced_costs(cost, sol)))
    iterations = sol.iterations
    if p == 1.0 and lexicographic:
        rc = reduced_costs(cost, sol)
        tight = rc <= 1e-12 * max(float(np.max(cost)), 1e-300)
        tight[sol.rows, sol.cols] = True
        second = np.where(tight, dist**2, np.inf)
        sol = transportation_simplex(second, plus.mass, minus.mass, basis=sol)
        iterations += sol.iterations
    plan = _atom_plan(pair, sol.rows, sol.cols, sol.flow, dist, p)
    value = plan.total_cost_p ** (1.0 / p)
    if isinstance(domain, Interval):
        reference, _ = sorted_line_ot(plus, minus, p)
        if abs(reference - value) > LINE_AGREEMENT * max(1.0, reference):
            raise SolverError(f"simplex value {value!r} disagrees with sorted 1-D value {reference!r}")
    return OracleResult(value, plan, certificate, iterations)


def sorted_line_ot(plus: Atoms, minus: Atoms, p: float) -> tuple[float, TransportPlan]:
    """Exact discrete W_p on a line by matching the two atom sets in cumulative order."""
    p = check_p(p)
    if len(plus) == 0 or len(minus) == 0:
        raise DegenerateError("empty measures")
    op = np.argsort(plus.coord, kind="stable")
    om = np.argsort(minus.coord, kind="stable")
    cp = np.cumsum(plus.mass[op])
    cm = np.cumsum(minus.mass[om])
    top = min(cp[-1], cm[-1])
    levels = np.union1d(cp, cm)
    levels = np.concatenate([[0.0], levels[levels < top], [top]])
    t0, t1 = levels[:-1], levels[1:]
    keep = t1 > t0
    t0, t1 = t0[keep], t1[keep]
    mid = 0.5 * (t0 + t1)
    i = op[np.minimum(np.searchsorted(cp, mid), len(cp) - 1)]
    j = om[np.minimum(np.searchsorted(cm, mid), len(cm) - 1)]
    flow = t1 - t0
    xs, ys = plus.coord[i], minus.coord[j]
    cost = flow * np.abs(xs - ys) ** p
    plan = TransportPlan(plus.edge[i], xs, xs, minus.edge[j], ys, ys, flow, cost)
    return float(np.sum(cost)) ** (1.0 / p), plan


def oracle_wasserstein(f: StepFunction, p: float, h: float | None = None) -> OracleResult:
    """Discretize ``f`` at step ``h`` (default ``1e-3 * c_1 / c_inf``) and solve exactly."""
    if h is None:
        h = default_grid_step(f)
    return solve_discrete_ot(discretize(f, h), f.domain, p)


def warm_up() -> None:
    """Compile the simplex kernels on a tiny problem."""
    a = np.array([0.5, 0.5])
    transportation_simplex(np.array([[1.0, 0.0], [0.0, 1.0]]), a, a)
