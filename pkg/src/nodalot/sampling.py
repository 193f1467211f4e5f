"""Seeded random generators for step functions in X, X_s and vertex-split stars."""

from __future__ import annotations

import numpy as np

from .domain import TWO_PI, Circle, Interval, Star
from .errors import InfeasibleSpecError
from .step import ClassSpec, StepFunction


def _dirichlet(rng: np.random.Generator, n: int, zero_prob: float = 0.0) -> np.ndarray:
    w = rng.dirichlet(np.ones(n))
    if zero_prob > 0 and n > 1:
        keep = rng.random(n) >= zero_prob
        if keep.any():
            w = np.where(keep, w, 0.0)
            w /= w.sum()
    return w


def _roughen(rng: np.random.Generator, length: float, c_inf: float, room: float) -> list[tuple[float, float]]:
    """Split a block of height ``c_inf`` into 2-4 outward sub-pieces of the same mass.

    The sub-piece touching the nodal point keeps ``c_inf``; the others are
    lower and may spill into ``room``. Returns ``(length, |value|)`` pairs, or
    the block unchanged if the spill does not fit.
    """
    k = int(rng.integers(2, 5))
    u = rng.uniform(0.2, 0.8)
    rest = c_inf * length * (1 - u)
    masses = rest * rng.dirichlet(np.ones(k - 1))
    values = c_inf * rng.uniform(0.3, 0.95, k - 1)
    available = length * (1 - u) + room
    need = float(np.sum(masses / values))
    if need > available:
        values = values * need / available
        if np.any(values >= c_inf):
            return [(length, c_inf)]
    return [(length * u, c_inf)] + [(m / v, v) for m, v in zip(masses, values)]


def _layout(rng, spec: ClassSpec, cyclic: bool, rough: bool, plateau_prob: float, zero_gap_prob: float) -> list:
    c_inf, c1, n = spec.c_inf, spec.c_1, spec.n_nodal
    length = TWO_PI if cyclic else spec.domain.edge_lengths[0]
    support = c1 / c_inf
    if support > length * (1 - 1e-12):
        raise InfeasibleSpecError(f"c_1 / c_inf = {support} does not fit in length {length}")
    half = 0.5 * support
    plus = half * _dirichlet(rng, n)
    minus = half * _dirichlet(rng, n)
    n_gaps = n if cyclic else n + 1
    gaps = (length - support) * _dirichlet(rng, n_gaps, zero_gap_prob)
    s0 = 1.0 if rng.random() < 0.5 else -1.0
    # nodal point j has a left block of sign s0*(-1)^j and a right block of the opposite sign
    left_len = [plus[j] if s0 * (-1) ** j > 0 else minus[j] for j in range(n)]
    right_len = [minus[j] if s0 * (-1) ** j > 0 else plus[j] for j in range(n)]

    def room_left(j):
        g = gaps[j] if not cyclic else gaps[j - 1]
        return g if (not cyclic and j == 0) else 0.5 * g

    def room_right(j):
        g = gaps[j + 1] if not cyclic else gaps[j]
        return g if (not cyclic and j == n - 1) else 0.5 * g

    pieces = []
    x = gaps[0] if not cyclic else 0.0
    for j in range(n):
        sign = s0 * (-1) ** j
        z = x + left_len[j]
        if rough:
            parts = _roughen(rng, left_len[j], c_inf, room_left(j))
            b = z
            for ln, v in parts:
                pieces.append((b - ln, b, sign * v))
                b -= ln
        else:
            pieces.append((x, z, sign * c_inf))
        lead = 0.0
        if rough and rng.random() < plateau_prob:
            lead = rng.uniform(0.0, 0.5) * room_right(j)
        b = z + lead
        if rough:
            for ln, v in _roughen(rng, right_len[j], c_inf, room_right(j) - lead):
                pieces.append((b, b + ln, -sign * v))
                b += ln
        else:
            pieces.append((b, b + right_len[j], -sign * c_inf))
        x = z + right_len[j] + (gaps[j + 1] if not cyclic else gaps[j])
    if cyclic:
        offset = rng.uniform(0, TWO_PI)
        pieces = [(0, a + offset, b + offset, v) for a, b, v in pieces]
    else:
        pieces = [(0, a, b, v) for a, b, v in pieces]
    return pieces


def random_xs(rng: np.random.Generator, spec: ClassSpec, zero_gap_prob: float = 0.2) -> StepFunction:
    """Random member of X_s(spec) on an interval or a circle."""
    if isinstance(spec.domain, Star):
        raise InfeasibleSpecError("random_xs supports the interval and the circle")
    cyclic = isinstance(spec.domain, Circle)
    if cyclic:
        spec.require_even_on_circle()
    return StepFunction(spec.domain, _layout(rng, spec, cyclic, False, 0.0, zero_gap_prob))


def random_x(rng: np.random.Generator, spec: ClassSpec, smooth_prob: float = 0.5, plateau_prob: float = 0.25) -> StepFunction:
    """Random member of X(spec): an X_s skeleton, roughened with probability ``1 - smooth_prob``.

    Roughening keeps the sup norm, the L1 norm, the zero integral and the
    number of nodal points, and may open zero plateaus at nodal points.
    """
    if isinstance(spec.domain, Star):
        raise InfeasibleSpecError("random_x supports the interval and the circle")
    cyclic = isinstance(spec.domain, Circle)
    if cyclic:
        spec.require_even_on_circle()
    rough = rng.random() >= smooth_prob
    return StepFunction(spec.domain, _layout(rng, spec, cyclic, rough, plateau_prob, 0.2))


def random_balanced(rng: np.random.Generator, domain, n_pieces: int = 8, zero_prob: float = 0.2) -> StepFunction:
    """Random zero-mean step function with ``n_pieces`` cells per edge and values in ``[-1, 1]``."""
    pieces = []
    for e, length in enumerate(domain.edge_lengths):
        cuts = np.sort(rng.uniform(0, length, n_pieces - 1))
        bounds = np.concatenate([[0.0], cuts, [length]])
        vals = rng.uniform(-1, 1, n_pieces)
        vals[rng.random(n_pieces) < zero_prob] = 0.0
        pieces += [(e, a, b, v) for a, b, v in zip(bounds[:-1], bounds[1:], vals) if b > a]
    return _balance(domain, pieces, rng)


def _balance(domain, pieces, rng) -> StepFunction:
    mp = sum((b - a) * v for _, a, b, v in pieces if v > 0)
    mn = sum((b - a) * -v for _, a, b, v in pieces if v < 0)
    if mp == 0 or mn == 0:
        # force one cell of each sign
        e, a, b, _ = pieces[0]
        pieces[0] = (e, a, b, 1.0)
        e, a, b, _ = pieces[-1]
        pieces[-1] = (e, a, b, -1.0)
        return _balance(domain, pieces, rng)
    # shrink the heavier side so values stay in [-1, 1]
    if mp > mn:
        pieces = [(e, a, b, v * mn / mp if v > 0 else v) for e, a, b, v in pieces]
    else:
        pieces = [(e, a, b, v * mp / mn if v < 0 else v) for e, a, b, v in pieces]
    return StepFunction(domain, pieces)


def random_vertex_split_star(
    rng: np.random.Generator, degree: int, c_inf: float = 1.0, max_pieces: int = 3, edge_range=(0.5, 2.0)
) -> StepFunction:
    """Random balanced star function whose edges each carry a single sign."""
    if degree < 2:
        raise InfeasibleSpecError("a vertex-split star needs at least two edges")
    edges = rng.uniform(*edge_range, degree)
    signs = np.where(rng.random(degree) < 0.5, 1.0, -1.0)
    if np.all(signs == signs[0]):
        signs[int(rng.integers(degree))] *= -1
    pieces = []
    for e, (length, s) in enumerate(zip(edges, signs)):
        k = int(rng.integers(1, max_pieces + 1))
        bounds = np.concatenate([[0.0], np.sort(rng.uniform(0, length, k - 1)), [length]])
        vals = s * rng.uniform(0.1, 1.0, k)
        vals[rng.random(k) < 0.2] = 0.0
        if not np.any(vals):
            vals[0] = s
        pieces += [(e, a, b, v) for a, b, v in zip(bounds[:-1], bounds[1:], vals) if b > a]
    f = _balance(Star(tuple(float(x) for x in edges)), pieces, rng)
    return f.scaled(c_inf / f.norms()[1])


def random_spec(rng: np.random.Generator, kind: str, n_max: int = 6) -> ClassSpec:
    """Random feasible class parameters on a domain of the given kind (``interval`` or ``circle``)."""
    c_inf = float(rng.uniform(0.5, 2.0))
    if kind == "interval":
        domain = Interval(float(rng.uniform(1.0, 4.0)))
        n = int(rng.integers(1, n_max + 1))
        length = domain.length
    elif kind == "circle":
        domain = Circle()
        n = 2 * int(rng.integers(1, n_max // 2 + 1))
        length = TWO_PI
    else:
        raise InfeasibleSpecError(f"random_spec does not sample {kind!r} domains")
    c1 = float(rng.uniform(0.1, 0.9)) * c_inf * length
    return ClassSpec(c_inf, c1, n, domain)
