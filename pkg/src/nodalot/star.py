"""Wasserstein-p on star graphs.

Exact paths:

* mass on at most two edges: the two edges form a segment through the vertex;
* vertex-split sign pattern (every edge single-signed): positive edges are
  superposed on the right half-line and negative edges on the left half-line;
  every transport path then passes through the vertex, so distances are
  preserved and the line solution lifts back by proportional splitting.

Anything else is handed to the discrete oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .domain import Domain, Interval, Star
from .errors import DegenerateError, DomainError, ImbalanceError, PreconditionError
from .line import BALANCE_RTOL, Density, abs_power_integral, balance, check_p, monotone_transport, split_densities
from .oracle import default_grid_step, oracle_wasserstein
from .plan import TransportPlan
from .step import StepFunction

ORACLE_ERROR_FACTOR = 3.0
ORDER_TOL = 1e-12


class StarResult(NamedTuple):
    value: float
    plan: TransportPlan
    method: str
    error_bound: float


def _require_star(f: StepFunction):
    if not isinstance(f.domain, Star):
        raise DomainError(f"expected a function on a star, got {f.domain!r}")


def values_at(f: StepFunction, edge: int, x: np.ndarray) -> np.ndarray:
    breaks, values = f.edge_arrays(edge)
    k = np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, len(values) - 1)
    return values[k]


def edge_signs(f: StepFunction) -> list[int]:
    """+1 / -1 for single-signed edges, 0 for edges without mass, 2 for mixed edges."""
    out = []
    for e in range(len(f.domain.edge_lengths)):
        vals = [q.value for q in f.edge_pieces(e)]
        pos, neg = any(v > 0 for v in vals), any(v < 0 for v in vals)
        out.append(2 if pos and neg else 1 if pos else -1 if neg else 0)
    return out


# -- folding -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FoldedFunction:
    """A vertex-split star function superposed onto one segment.

    ``g`` lives on ``Interval(neg_reach + pos_reach)``; the vertex sits at
    ``origin = neg_reach``, positive edges extend to the right and negative
    edges to the left. ``plus`` and ``minus`` are the two parts of ``g`` as
    densities that keep every breakpoint of the original edges.
    """

    source: StepFunction
    g: StepFunction
    origin: float
    positive_edges: tuple[int, ...]
    negative_edges: tuple[int, ...]
    plus: Density
    minus: Density


def _superpose(f: StepFunction, edges: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    if not edges:
        return np.zeros(1), np.zeros(0)
    breaks = np.unique(np.concatenate([f.edge_arrays(e)[0] for e in edges]))
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    total = np.zeros(len(mids))
    for e in edges:
        L = f.domain.edge_lengths[e]
        total += np.where(mids < L, values_at(f, e, mids), 0.0)
    return breaks, total


def fold_to_line(f: StepFunction, split: int | Iterable[int]) -> FoldedFunction:
    """Superpose the edges of a vertex-split function onto a segment.

    ``split`` is either the number ``M`` of leading edges carrying the
    positive part, or an explicit collection of positive edge indices.

    Raises
    ------
    PreconditionError
        If a positive edge carries negative values or vice versa.
    """
    _require_star(f)
    D = f.domain.degree
    if isinstance(split, (int, np.integer)):
        if not 0 <= split <= D:
            raise PreconditionError(f"split index {split} outside 0..{D}")
        positive = tuple(range(int(split)))
    else:
        positive = tuple(sorted({int(e) for e in split}))
        if any(not 0 <= e < D for e in positive):
            raise PreconditionError(f"positive edges {positive} outside 0..{D - 1}")
    negative = tuple(e for e in range(D) if e not in positive)
    signs = edge_signs(f)
    bad = [e for e in positive if signs[e] in (-1, 2)] + [e for e in negative if signs[e] in (1, 2)]
    if bad:
        raise PreconditionError(f"edges {sorted(bad)} do not have the sign required by the split")

    lengths = f.domain.edge_lengths
    pos_reach = max((lengths[e] for e in positive), default=0.0)
    neg_reach = max((lengths[e] for e in negative), default=0.0)
    pb, pv = _superpose(f, positive)
    nb, nv = _superpose(f, negative)
    rows = [(neg_reach + a, neg_reach + b, v) for a, b, v in zip(pb[:-1], pb[1:], pv)]
    rows += [(neg_reach - b, neg_reach - a, v) for a, b, v in zip(nb[:-1], nb[1:], nv)]
    g = StepFunction(Interval(neg_reach + pos_reach), [(0, a, b, v) for a, b, v in rows])
    plus, minus = split_densities(rows)
    return FoldedFunction(f, g, neg_reach, positive, negative, plus, minus)


def _proportional_split(f: StepFunction, edges, coords, sign: float) -> np.ndarray:
    """Share of each edge in the superposed density at ``coords``; shape (len(edges), n)."""
    lengths = f.domain.edge_lengths
    share = np.array([np.where(coords < lengths[e], np.maximum(sign * values_at(f, e, coords), 0.0), 0.0) for e in edges])
    total = share.sum(axis=0)
    return share / np.where(total > 0, total, 1.0)


def unfold_plan(folded: FoldedFunction, line_plan: TransportPlan) -> TransportPlan:
    """Lift a plan on the folded segment to the star by proportional splitting."""
    f, o = folded.source, folded.origin
    xs0, xs1 = line_plan.src_start - o, line_plan.src_end - o
    ys0, ys1 = o - line_plan.dst_end, o - line_plan.dst_start
    a = _proportional_split(f, folded.positive_edges, 0.5 * (xs0 + xs1), 1.0)
    b = _proportional_split(f, folded.negative_edges, 0.5 * (ys0 + ys1), -1.0)
    parts = []
    for i, ei in enumerate(folded.positive_edges):
        for k, ek in enumerate(folded.negative_edges):
            w = a[i] * b[k]
            keep = w > 0
            if not np.any(keep):
                continue
            n = int(np.sum(keep))
            parts.append(
                TransportPlan(
                    np.full(n, ei), xs0[keep], xs1[keep], np.full(n, ek), ys0[keep], ys1[keep],
                    line_plan.mass[keep] * w[keep], line_plan.cost[keep] * w[keep],
                )
            )
    return TransportPlan.concat(parts)


def wasserstein_folded(folded: FoldedFunction, p: float) -> tuple[float, TransportPlan]:
    plus, minus = balance(folded.plus, folded.minus)
    cost_p, line_plan = monotone_transport(plus, minus, p)
    return cost_p ** (1.0 / p), unfold_plan(folded, line_plan)


def vertex_split_edges(f: StepFunction) -> tuple[int, ...] | None:
    """Positive edges of a vertex-split function, or ``None`` if some edge has both signs."""
    signs = edge_signs(f)
    if 2 in signs:
        return None
    return tuple(e for e, s in enumerate(signs) if s == 1)


# -- two-edge path -------------------------------------------------------------


def _two_edge_transport(f: StepFunction, a: int, b: int, p: float) -> tuple[float, TransportPlan]:
    """Edge ``a`` reversed followed by edge ``b`` form the segment ``[0, L_a + L_b]``."""
    La = f.domain.edge_lengths[a]
    rows = [(La - q.end, La - q.start, q.value) for q in f.edge_pieces(a)]
    if b != a:
        rows += [(La + q.start, La + q.end, q.value) for q in f.edge_pieces(b)]
    plus, minus = balance(*split_densities(rows))
    cost_p, plan = monotone_transport(plus, minus, p)

    def back(lo, hi):
        on_a = 0.5 * (lo + hi) < La
        return np.where(on_a, a, b), np.where(on_a, La - hi, lo - La), np.where(on_a, La - lo, hi - La)

    se, s0, s1 = back(plan.src_start, plan.src_end)
    de, d0, d1 = back(plan.dst_start, plan.dst_end)
    return cost_p ** (1.0 / p), TransportPlan(se, s0, s1, de, d0, d1, plan.mass, plan.cost)


# -- entry points ----------------------------------------------------------------


def wasserstein_star(f: StepFunction, p: float, h: float | None = None) -> StarResult:
    """W_p(f+, f-) on a star graph.

    Exact when the mass sits on at most two edges (``method="line"``) or the
    sign pattern splits at the vertex (``method="fold"``); otherwise the
    discrete oracle at grid step ``h`` is used (``method="oracle"``) and
    ``error_bound`` is ``3 * h``.

    Raises
    ------
    ImbalanceError
        If the two parts carry different masses.
    DegenerateError
        If ``f`` vanishes identically.
    """
    _require_star(f)
    p = check_p(p)
    support = [e for e, s in enumerate(edge_signs(f)) if s != 0]
    if len(support) <= 2:
        a, b = (support + support)[:2] if support else (0, 1)
        value, plan = _two_edge_transport(f, a, b, p)
        return StarResult(value, plan, "line", 0.0)
    positive = vertex_split_edges(f)
    if positive is not None:
        value, plan = wasserstein_folded(fold_to_line(f, positive), p)
        return StarResult(value, plan, "fold", 0.0)
    if h is None:
        h = default_grid_step(f)
    res = oracle_wasserstein(f, p, h)
    return StarResult(res.value, res.plan, "oracle", ORACLE_ERROR_FACTOR * h)


def wasserstein1_tree(f: StepFunction) -> float:
    """Exact W_1 on an interval or star: integral over each edge of the net mass beyond each point."""
    if not isinstance(f.domain, (Star, Interval)):
        raise DomainError(f"expected an interval or a star, got {f.domain!r}")
    l1, _, integral = f.norms()
    if l1 == 0:
        raise DegenerateError("the function vanishes identically")
    if abs(integral) > BALANCE_RTOL * l1:
        raise ImbalanceError(f"the function has nonzero integral {integral!r}")
    total = 0.0
    for e in range(len(f.domain.edge_lengths)):
        breaks, values = f.edge_arrays(e)
        tail = np.concatenate([np.cumsum((values * np.diff(breaks))[::-1])[::-1], [0.0]])
        total += float(np.sum(abs_power_integral(tail[:-1], tail[1:], np.diff(breaks), 1.0)))
    return total


# -- monotonicity of plans -------------------------------------------------------


class MonotonicityViolation(NamedTuple):
    scenario: int
    first: int
    second: int


def check_plan_monotonicity(plan: TransportPlan, domain: Domain, tol: float = ORDER_TOL) -> list[MonotonicityViolation]:
    """Pairs of moves ``(x_i -> y_k)``, ``(x'_j -> y'_l)`` in forbidden relative positions.

    ``x' < x`` means the source segment of the second move lies entirely
    before the first and their midpoints differ by more than ``tol``.
    Scenario 1: ``i, j, k`` distinct, ``k == l``, ``x' < x`` and ``y' < y``.
    Scenario 2: ``i == j``, ``j, k, l`` distinct, ``x' < x`` and ``y' < y``.
    Scenario 3: ``i == j`` and ``k == l``; if ``k != i`` the pair is forbidden
    when ``x' < x`` and ``y' < y`` (both paths cross the vertex), and if all
    four points lie on one edge it is forbidden when the pair crosses
    (``x' < x`` and ``y' > y``). On an interval only the crossing test applies.
    """
    if not isinstance(domain, (Star, Interval)):
        raise DomainError(f"monotonicity is checked on stars and intervals, got {domain!r}")
    if len(plan) == 0:
        return []
    i, j = plan.src_edge[:, None], plan.src_edge[None, :]
    k, l = plan.dst_edge[:, None], plan.dst_edge[None, :]
    xm, ym = plan.src_mid, plan.dst_mid
    # [a, b] is True when move b's source lies before move a's source
    x_before = (plan.src_end[None, :] <= plan.src_start[:, None] + tol) & (xm[None, :] < xm[:, None] - tol)
    y_before = (plan.dst_end[None, :] <= plan.dst_start[:, None] + tol) & (ym[None, :] < ym[:, None] - tol)
    y_after = (plan.dst_start[None, :] >= plan.dst_end[:, None] - tol) & (ym[None, :] > ym[:, None] + tol)
    if isinstance(domain, Interval):
        masks = {3: x_before & y_after}
    else:
        spread = x_before & y_before
        masks = {
            1: spread & (i != j) & (j != k) & (i != k) & (k == l),
            2: spread & (i == j) & (j != k) & (k != l) & (j != l),
            3: ((i == j) & (k == l) & (k != i) & spread) | ((i == j) & (k == l) & (k == i) & x_before & y_after),
        }
    out = []
    for scenario, mask in masks.items():
        for a, b in zip(*np.nonzero(mask)):
            out.append(MonotonicityViolation(scenario, int(a), int(b)))
    return out
