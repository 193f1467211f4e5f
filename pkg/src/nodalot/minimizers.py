"""Minimizers and minimum values of W_p(f+, f-) over the class X(c_inf, c_1, N, domain).

On the interval and the circle the minimizer consists of N antisymmetric
bumps of height ``c_inf``. On a star the vertex acts as a nodal point of
higher multiplicity; closed forms exist for long edges (even degree, or odd
degree with ``p = 1``) and for three edges with one short edge (``p = 1``).
Everything else goes through :func:`minimize_star_numeric`, which solves the
finite-dimensional problem over vertex radii and interior half-widths.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .domain import TWO_PI, Circle, Interval, Star
from .errors import InfeasibleSpecError, UnsupportedCaseError
from .line import Density, check_p, monotone_transport
from .step import ClassSpec, StepFunction

SHORT_EDGE_CASE_TOL = 1e-12


@dataclass(frozen=True)
class StarConfig:
    """Vertex radii ``r`` (one per edge), interior half-widths ``d`` and the edge ``q[l]`` of each interior point."""

    r: tuple[float, ...]
    d: tuple[float, ...]
    q: tuple[int, ...]
    positive_edges: tuple[int, ...]
    c_tilde_1: float

    @property
    def M(self) -> int:
        return len(self.positive_edges)

    def to_json(self) -> dict:
        return {
            "r": list(self.r),
            "d": list(self.d),
            "q": list(self.q),
            "positive_edges": list(self.positive_edges),
            "M": self.M,
            "c_tilde_1": self.c_tilde_1,
        }


@dataclass(frozen=True, eq=False)
class MinimizerResult:
    f_star: StepFunction
    value: float
    effective_n: Optional[float]
    case: str
    p: float
    config: Optional[StarConfig] = None

    def to_json(self) -> dict:
        out = {"case": self.case, "value": self.value, "p": self.p, "effective_N": self.effective_n}
        if self.config is not None:
            out["config"] = self.config.to_json()
        out["f_star"] = self.f_star.to_json()
        return out


def bump_value(c_1: float, c_inf: float, n_eff: float, p: float) -> float:
    """Minimum value with ``n_eff`` effective nodal points: ``2**(-1-1/p) * (c_1/c_inf) * c_1**(1/p) / n_eff``."""
    return 2.0 ** (-1.0 - 1.0 / p) * (c_1 / c_inf) * c_1 ** (1.0 / p) / n_eff


def odd_vertex_multiplicity(D: int) -> float:
    """Effective nodal count of the vertex of an odd-degree star (``p = 1``)."""
    return (D + 1) * (D - 1) / (2.0 * D)


def _bump(edge: int, center: float, half: float, c_inf: float, first_sign: int) -> list[tuple]:
    return [
        (edge, center - half, center, first_sign * c_inf),
        (edge, center, center + half, -first_sign * c_inf),
    ]


def _effective_n(spec: ClassSpec, value: float, p: float) -> float:
    return bump_value(spec.c_1, spec.c_inf, 1.0, p) / value


# -- interval and circle ----------------------------------------------------------


def minimize_interval(spec: ClassSpec, p: float) -> MinimizerResult:
    """N alternating antisymmetric bumps of half-width ``c_1 / (2 c_inf N)`` at ``(j - 1/2) L / N``.

    Raises
    ------
    InfeasibleSpecError
        If the domain is not an interval (feasibility itself is checked by ``ClassSpec``).
    """
    if not isinstance(spec.domain, Interval):
        raise InfeasibleSpecError(f"expected an interval spec, got {spec.domain!r}")
    p = check_p(p)
    N, L = spec.n_nodal, spec.domain.length
    half = spec.c_1 / (2.0 * spec.c_inf * N)
    pieces = []
    for j in range(1, N + 1):
        pieces += _bump(0, (j - 0.5) * L / N, half, spec.c_inf, 1 if j % 2 else -1)
    return MinimizerResult(
        StepFunction(spec.domain, pieces), bump_value(spec.c_1, spec.c_inf, N, p), float(N), "interval", p
    )


def minimize_circle(spec: ClassSpec, p: float) -> MinimizerResult:
    """Same bumps as on the interval at ``(j - 1/2) 2 pi / N``; requires even N.

    Raises
    ------
    ParityError
        If N is odd.
    """
    if not isinstance(spec.domain, Circle):
        raise InfeasibleSpecError(f"expected a circle spec, got {spec.domain!r}")
    p = check_p(p)
    spec.require_even_on_circle()
    N = spec.n_nodal
    half = spec.c_1 / (2.0 * spec.c_inf * N)
    pieces = []
    for j in range(1, N + 1):
        pieces += _bump(0, (j - 0.5) * TWO_PI / N, half, spec.c_inf, 1 if j % 2 else -1)
    return MinimizerResult(
        StepFunction(spec.domain, pieces), bump_value(spec.c_1, spec.c_inf, N, p), float(N), "circle", p
    )


# -- star layout -----------------------------------------------------------------


def star_function(domain: Star, c_inf: float, r, positive_edges, bumps_per_edge, half_widths) -> StepFunction:
    """Vertex runs of length ``r[j]`` plus ``bumps_per_edge[j]`` equal bumps spread evenly over the rest of edge ``j``.

    On an edge whose vertex run has sign ``s`` the ``i``-th bump starts with
    sign ``s * (-1)**i`` (``i`` from 0) so that no zero plateau separates
    opposite signs.
    """
    pieces = []
    for j, L in enumerate(domain.edges):
        s = 1 if j in positive_edges else -1
        if r[j] > 0:
            pieces.append((j, 0.0, r[j], s * c_inf))
        n, d = bumps_per_edge[j], half_widths[j]
        if n == 0:
            continue
        gap = max(L - r[j] - 2 * n * d, 0.0) / (n + 1)
        for i in range(n):
            center = r[j] + gap * (i + 1) + d * (2 * i + 1)
            pieces += _bump(j, center, d, c_inf, s * (-1) ** i)
    return StepFunction(domain, pieces)


def _round_robin(D: int, count: int) -> list[int]:
    return [sum(1 for l in range(count) if l % D == j) for j in range(D)]


def _config(r, positive, bumps, half_widths, c_inf) -> StarConfig:
    q, d = [], []
    for j, n in enumerate(bumps):
        q += [j] * n
        d += [half_widths[j]] * n
    return StarConfig(tuple(r), tuple(d), tuple(q), tuple(positive), c_inf * float(sum(r)))


def long_edges(spec: ClassSpec) -> bool:
    return all(L >= spec.c_1 / spec.c_inf for L in spec.domain.edges)


def minimize_star_closed_form(spec: ClassSpec, p: float) -> MinimizerResult:
    """Closed-form minimizer on a star whose edges all have length at least ``c_1 / c_inf``.

    Even degree: ``value = bump_value(c_1, c_inf, N - 1 + D/2, p)``. Odd degree
    (``p = 1`` only): ``value = c_1**2 / (4 (N - 1 + Dt) c_inf)`` with
    ``Dt = (D+1)(D-1)/(2D)``.

    Raises
    ------
    InfeasibleSpecError
        If some edge is shorter than ``c_1 / c_inf`` (use :func:`minimize_star_numeric`).
    UnsupportedCaseError
        For odd degree with ``p != 1``.
    """
    if not isinstance(spec.domain, Star):
        raise InfeasibleSpecError(f"expected a star spec, got {spec.domain!r}")
    p = check_p(p)
    if not long_edges(spec):
        raise InfeasibleSpecError("some edge is shorter than c_1/c_inf; use minimize_star_numeric")
    D, N, c1, cinf = spec.domain.degree, spec.n_nodal, spec.c_1, spec.c_inf
    bumps = _round_robin(D, N - 1)
    if D % 2 == 0:
        n_eff = N - 1 + D / 2
        d = c1 / (2 * cinf * n_eff)
        positive = tuple(range(D // 2))
        r = [d] * D
        f = star_function(spec.domain, cinf, r, positive, bumps, [d] * D)
        value = bump_value(c1, cinf, n_eff, p)
        return MinimizerResult(f, value, n_eff, "star_even", p, _config(r, positive, bumps, [d] * D, cinf))
    if p != 1.0:
        raise UnsupportedCaseError("the odd-degree closed form is known for p = 1 only; use minimize_star_numeric")
    Dt = odd_vertex_multiplicity(D)
    n_eff = N - 1 + Dt
    ct1 = Dt * c1 / n_eff
    d = ct1 / (2 * Dt * cinf)
    M = (D - 1) // 2
    positive = tuple(range(M))
    r = [ct1 / (cinf * (D - 1))] * M + [ct1 / (cinf * (D + 1))] * (D - M)
    f = star_function(spec.domain, cinf, r, positive, bumps, [d] * D)
    value = c1**2 / (4 * n_eff * cinf)
    return MinimizerResult(f, value, n_eff, "star_odd", p, _config(r, positive, bumps, [d] * D, cinf))


def short_edge_value(c_1: float, c_inf: float, N: int, beta: float) -> float:
    """``(c_1**2 / (4 c_inf)) ((1 - beta)**2 + 3 N beta**2) / N`` for a three-edge star with one short edge."""
    return c_1**2 / (4 * c_inf) * ((1 - beta) ** 2 + 3 * N * beta**2) / N


def short_edge_threshold(N: int) -> float:
    return 1.0 / (3 * N + 1)


def minimize_star_short_edge_D3(spec: ClassSpec, p: float = 1.0) -> MinimizerResult:
    """Three-edge star, ``p = 1``, third edge short: ``beta = L_3 c_inf / c_1 <= 1 / (3N + 1)``.

    The short edge is filled with negative mass, edge 0 carries the positive
    vertex run and edge 1 the rest of the negative vertex run; interior
    bumps have half-width ``(c_1/c_inf - L_3) / (2N)``.

    Raises
    ------
    InfeasibleSpecError
        If the star is not of this shape or the bumps do not fit.
    UnsupportedCaseError
        If ``p != 1``.
    """
    if not (isinstance(spec.domain, Star) and spec.domain.degree == 3):
        raise InfeasibleSpecError(f"expected a three-edge star, got {spec.domain!r}")
    p = check_p(p)
    if p != 1.0:
        raise UnsupportedCaseError("the short-edge closed form is known for p = 1 only")
    c1, cinf, N = spec.c_1, spec.c_inf, spec.n_nodal
    L1, L2, L3 = spec.domain.edges
    beta = L3 * cinf / c1
    if beta > short_edge_threshold(N) + SHORT_EDGE_CASE_TOL:
        raise InfeasibleSpecError(f"beta = {beta} exceeds 1/(3N+1); the long-edge formula applies")
    if min(L1, L2) < c1 / (2 * cinf):
        raise InfeasibleSpecError("edges 0 and 1 must be at least c_1/(2 c_inf) long")
    d = (c1 / cinf - L3) / (2 * N)
    ct1 = cinf * (c1 / (N * cinf) + (N - 1) * L3 / N)
    r = [ct1 / (2 * cinf), ct1 / (2 * cinf) - L3, L3]
    bumps = [0, 0, 0]
    room = [L1 - r[0], L2 - r[1], 0.0]
    for _ in range(N - 1):
        j = int(np.argmax(room[:2]))
        if room[j] < 2 * d * (1 - 1e-12):
            raise InfeasibleSpecError("interior bumps do not fit on the long edges")
        bumps[j] += 1
        room[j] -= 2 * d
    positive = (0,)
    f = star_function(spec.domain, cinf, r, positive, bumps, [d] * 3)
    value = short_edge_value(c1, cinf, N, beta)
    return MinimizerResult(f, value, _effective_n(spec, value, p), "star_short_edge", p, _config(r, positive, bumps, [d] * 3, cinf))


# -- numeric star solver -------------------------------------------------------------


def water_fill(caps: np.ndarray, amount: float) -> Optional[np.ndarray]:
    """``r_j = min(cap_j, tau)`` with ``sum r = amount``; ``None`` if the caps cannot hold it.

    This allocation maximizes the mass within every distance of the vertex
    simultaneously, so its quantile is pointwise minimal.
    """
    caps = np.maximum(np.asarray(caps, dtype=float), 0.0)
    total = float(np.sum(caps))
    if amount > total * (1 + 1e-12) + 1e-300:
        return None
    if amount >= total:
        return caps.copy()
    srt = np.sort(caps)
    n = len(srt)
    used = 0.0
    for k in range(n):
        # level between srt[k-1] and srt[k]: edges k.. are unsaturated
        need = used + srt[k] * (n - k)
        if need >= amount:
            tau = (amount - used) / (n - k)
            return np.minimum(caps, tau)
        used += srt[k]
    return caps.copy()


def vertex_cost(r_pos: np.ndarray, r_neg: np.ndarray, c_inf: float, p: float) -> float:
    """W_p^p of the superposed vertex runs, positive to the right and negative to the left."""

    def side(radii):
        radii = np.asarray(radii, dtype=float)
        radii = radii[radii > 0]
        b = np.unique(np.concatenate([[0.0], radii]))
        count = np.array([np.sum(radii > x) for x in b[:-1]], dtype=float)
        return b[:-1], b[1:], c_inf * count

    plo, phi, pd = side(r_pos)
    nlo, nhi, nd = side(r_neg)
    if len(pd) == 0 or len(nd) == 0:
        return 0.0
    plus = Density(plo, phi, pd)
    minus = Density(-nhi[::-1], -nlo[::-1], nd[::-1])
    minus = minus.scaled(plus.mass / minus.mass)
    return monotone_transport(plus, minus, p)[0]


@dataclass(frozen=True)
class _Candidate:
    cost_p: float
    key: tuple
    positive: tuple[int, ...]
    bumps: tuple[int, ...]
    totals: tuple[float, ...]
    r: tuple[float, ...]


def _compositions(total: int, parts: int):
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts + (total + parts - 1,):
            out.append(c - prev - 1)
            prev = c
        yield tuple(out)


def star_configurations(domain: Star, N: int):
    """Vertex sign patterns times per-edge interior bump counts, up to sign flip and equal-length symmetry."""
    D = domain.degree
    seen = set()
    for mask in range(1, 2**D - 1):
        positive = tuple(j for j in range(D) if mask >> j & 1)
        for bumps in _compositions(N - 1, D):
            keys = []
            for flip in (False, True):
                keys.append(tuple(sorted(
                    (domain.edges[j], (j in positive) != flip, bumps[j]) for j in range(D)
                )))
            key = min(keys)
            if key in seen:
                continue
            seen.add(key)
            yield positive, bumps


class _Problem:
    """Cost of one configuration as a function of the per-edge interior totals ``t_j = n_j d_j``."""

    def __init__(self, spec: ClassSpec, positive, bumps, p: float):
        self.spec, self.p = spec, p
        self.L = np.array(spec.domain.edges)
        self.pos = np.array([j in positive for j in range(len(self.L))])
        self.bumps = np.array(bumps)
        self.active = np.nonzero(self.bumps)[0]

    def full(self, t) -> np.ndarray:
        out = np.zeros(len(self.L))
        out[self.active] = t
        return out

    def radii(self, t) -> Optional[np.ndarray]:
        c1, cinf = self.spec.c_1, self.spec.c_inf
        T = self.full(t)
        half = (c1 - 2 * cinf * float(np.sum(T))) / (2 * cinf)
        if half < 0:
            return None
        caps = self.L - 2 * T
        if np.any(caps < -1e-12):
            return None
        rp = water_fill(caps[self.pos], half)
        rn = water_fill(caps[~self.pos], half)
        if rp is None or rn is None:
            return None
        r = np.zeros(len(self.L))
        r[self.pos], r[~self.pos] = rp, rn
        return r

    def cost(self, t) -> float:
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        r = self.radii(t)
        if r is None:
            return math.inf
        cinf, p = self.spec.c_inf, self.p
        n = self.bumps[self.active]
        interior = float(np.sum(cinf * n * (t / n) ** (p + 1)))
        return interior + vertex_cost(r[self.pos], r[~self.pos], cinf, p)

    def linear_constraints(self):
        """Rows ``a @ t <= b`` describing feasibility, besides ``0 <= t_j <= L_j / 2``."""
        c1, cinf = self.spec.c_1, self.spec.c_inf
        k = len(self.active)
        rows, rhs = [np.full(k, 2 * cinf)], [c1]
        for side in (self.pos, ~self.pos):
            # sum_{side} (L_j - 2 t_j) >= (c1 - 2 cinf sum t) / (2 cinf)
            a = np.where(side[self.active], 2.0, 0.0) - 1.0
            rows.append(a)
            rhs.append(float(np.sum(self.L[side])) - c1 / (2 * cinf))
        return np.array(rows), np.array(rhs)


def _solve_1d(prob: _Problem) -> tuple[float, np.ndarray]:
    A, b = prob.linear_constraints()
    hi = prob.L[prob.active[0]] / 2
    lo = 0.0
    for a, rhs in zip(A[:, 0], b):
        if a > 0:
            hi = min(hi, rhs / a)
        elif a < 0:
            lo = max(lo, rhs / a)
    if hi < lo:
        return math.inf, np.zeros(1)
    grid = np.linspace(lo, hi, 65)
    vals = np.array([prob.cost([x]) for x in grid])
    k = int(np.argmin(vals))
    a, c = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    best_t, best = grid[k], vals[k]
    if c > a:
        res = minimize_scalar(lambda x: prob.cost([x]), bounds=(a, c), method="bounded", options={"xatol": 1e-13})
        if res.fun < best:
            best_t, best = float(res.x), float(res.fun)
    return best, np.array([best_t])


def _solve_nd(prob: _Problem, rng: np.random.Generator) -> tuple[float, np.ndarray]:
    A, b = prob.linear_constraints()
    k = len(prob.active)
    bounds = [(0.0, prob.L[j] / 2) for j in prob.active]
    cons = [{"type": "ineq", "fun": lambda t, A=A, b=b: b - A @ t, "jac": lambda t, A=A: -A}]
    c1, cinf = prob.spec.c_1, prob.spec.c_inf
    n = prob.bumps[prob.active]
    # start at equal half-widths for interior and vertex, then random feasible points
    starts = [n * c1 / (2 * cinf * (float(np.sum(n)) + prob.spec.domain.degree / 2))]
    while len(starts) < 6:
        starts.append(rng.dirichlet(np.ones(k + 1))[:k] * c1 / (2 * cinf))
    best, best_t = math.inf, np.zeros(k)
    for t0 in starts:
        t0 = np.clip(t0, 0, [u for _, u in bounds])
        # infeasible probes return inf; their finite differences are discarded by the line search
        with np.errstate(invalid="ignore"):
            res = minimize(prob.cost, t0, method="SLSQP", bounds=bounds, constraints=cons,
                           options={"ftol": 1e-15, "maxiter": 500})
        t = np.clip(res.x, 0, [u for _, u in bounds])
        val = prob.cost(t)
        if val < best:
            best, best_t = val, t
    return best, best_t


def two_long_edges(spec: ClassSpec) -> bool:
    return sum(L >= spec.c_1 / (2 * spec.c_inf) for L in spec.domain.edges) >= 2


def minimize_star_numeric(spec: ClassSpec, p: float, seed: int = 0) -> MinimizerResult:
    """Numerical minimum over vertex sign patterns, interior bump placements and widths.

    For each configuration (positive vertex edges, number of interior bumps
    per edge) the interior bumps on one edge share a half-width, the vertex
    radii are obtained by water-filling each side up to the room left on
    every edge, and the remaining per-edge totals are optimized under the
    linear feasibility constraints.

    Raises
    ------
    UnsupportedCaseError
        If fewer than two edges are at least ``c_1 / (2 c_inf)`` long.
    """
    if not isinstance(spec.domain, Star):
        raise InfeasibleSpecError(f"expected a star spec, got {spec.domain!r}")
    p = check_p(p)
    if not two_long_edges(spec):
        raise UnsupportedCaseError("needs at least two edges of length >= c_1/(2 c_inf)")
    rng = np.random.default_rng(seed)
    best: Optional[_Candidate] = None
    for positive, bumps in star_configurations(spec.domain, spec.n_nodal):
        prob = _Problem(spec, positive, bumps, p)
        if len(prob.active) == 0:
            val, t = prob.cost(np.zeros(0)), np.zeros(0)
        elif len(prob.active) == 1:
            val, t = _solve_1d(prob)
        else:
            val, t = _solve_nd(prob, rng)
        if not math.isfinite(val):
            continue
        key = (positive, bumps)
        if best is None or val < best.cost_p * (1 - 1e-13) or (val <= best.cost_p * (1 + 1e-13) and key < best.key):
            r = prob.radii(t)
            best = _Candidate(val, key, positive, bumps, tuple(prob.full(t)), tuple(r))
    if best is None:
        raise InfeasibleSpecError("no feasible configuration")
    half_widths = [T / n if n else 0.0 for T, n in zip(best.totals, best.bumps)]
    f = star_function(spec.domain, spec.c_inf, list(best.r), best.positive, best.bumps, half_widths)
    value = best.cost_p ** (1.0 / p)
    config = _config(list(best.r), best.positive, best.bumps, half_widths, spec.c_inf)
    return MinimizerResult(f, value, _effective_n(spec, value, p), "star_numeric", p, config)


# -- dispatch ----------------------------------------------------------------------------


def minimize_spec(spec: ClassSpec, p: float) -> MinimizerResult:
    """Closed form where one applies, otherwise the numeric star solver."""
    if isinstance(spec.domain, Interval):
        return minimize_interval(spec, p)
    if isinstance(spec.domain, Circle):
        return minimize_circle(spec, p)
    D = spec.domain.degree
    if long_edges(spec) and (D % 2 == 0 or p == 1.0):
        return minimize_star_closed_form(spec, p)
    if D == 3 and p == 1.0 and _short_edge_applies(spec):
        return minimize_star_short_edge_D3(spec, p)
    return minimize_star_numeric(spec, p)


def _short_edge_applies(spec: ClassSpec) -> bool:
    L1, L2, L3 = spec.domain.edges
    return (
        L3 * spec.c_inf / spec.c_1 <= short_edge_threshold(spec.n_nodal) + SHORT_EDGE_CASE_TOL
        and min(L1, L2) >= spec.c_1 / (2 * spec.c_inf)
    )


def sharp_lower_bound(spec: ClassSpec, p: float) -> float:
    """Smallest possible W_p(f+, f-) over the class, i.e. the value attained by its minimizers.

    Raises
    ------
    ParityError
        On the circle with odd N (the class is empty).
    UnsupportedCaseError
        On stars where no minimizer is available.
    """
    p = check_p(p)
    if isinstance(spec.domain, (Interval, Circle)):
        if isinstance(spec.domain, Circle):
            spec.require_even_on_circle()
        return bump_value(spec.c_1, spec.c_inf, spec.n_nodal, p)
    return minimize_spec(spec, p).value
