"""Exact Wasserstein-p between the positive and negative parts of a step function on a line.

Both quantile functions are piecewise linear in the mass level, so on every
level interval where neither has a breakpoint their difference is linear and
``|difference|**p`` integrates in closed form.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .domain import Interval
from .errors import DegenerateError, DomainError, ImbalanceError, InvalidInputError
from .plan import TransportPlan
from .step import StepFunction

BALANCE_RTOL = 1e-9
LEVEL_RTOL = 1e-13


class Density(NamedTuple):
    """Nonnegative piecewise-constant density: disjoint sorted segments ``[lo, hi)`` with value ``dens > 0``."""

    lo: np.ndarray
    hi: np.ndarray
    dens: np.ndarray

    @property
    def mass(self) -> float:
        return float(np.sum((self.hi - self.lo) * self.dens))

    def knots(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum((self.hi - self.lo) * self.dens)])

    def scaled(self, a: float) -> "Density":
        return Density(self.lo, self.hi, self.dens * a)


class Quantile(NamedTuple):
    """Piecewise-linear quantile: on ``[c[k], c[k+1]]`` it equals ``lo[k] + (t - c[k]) / dens[k]``."""

    c: np.ndarray
    lo: np.ndarray
    dens: np.ndarray

    @classmethod
    def of(cls, d: Density) -> "Quantile":
        return cls(d.knots(), d.lo, d.dens)

    def at(self, k: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self.lo[k] + (t - self.c[k]) / self.dens[k]


class LineResult(NamedTuple):
    value: float
    plan: TransportPlan


def check_p(p: float) -> float:
    p = float(p)
    if not (math.isfinite(p) and p >= 1):
        raise InvalidInputError(f"p must be a finite real >= 1, got {p!r}")
    return p


def split_densities(pieces) -> tuple[Density, Density]:
    """Positive and negative parts of ``(start, end, value)`` triples (any order, no overlaps)."""
    rows = sorted((float(a), float(b), float(v)) for a, b, v in pieces if b > a and v != 0.0)
    plus = [(a, b, v) for a, b, v in rows if v > 0]
    minus = [(a, b, -v) for a, b, v in rows if v < 0]

    def pack(rs):
        if not rs:
            return Density(np.zeros(0), np.zeros(0), np.zeros(0))
        a, b, v = map(np.array, zip(*rs))
        return Density(a, b, v)

    return pack(plus), pack(minus)


def balance(plus: Density, minus: Density) -> tuple[Density, Density]:
    """Check equal masses and rescale the negative side so they agree to rounding."""
    mp, mn = plus.mass, minus.mass
    if mp + mn == 0:
        raise DegenerateError("the function vanishes identically")
    if abs(mp - mn) > BALANCE_RTOL * (mp + mn):
        raise ImbalanceError(f"positive mass {mp!r} differs from negative mass {mn!r}")
    if mp == 0 or mn == 0:
        raise ImbalanceError("one of the two parts is empty")
    return plus, minus.scaled(mp / mn)


def abs_power_integral(d0: np.ndarray, d1: np.ndarray, width: np.ndarray, p: float) -> np.ndarray:
    """``int_0^w |d0 + (d1 - d0) s / w|^p ds`` for each row, exactly."""
    d0 = np.asarray(d0, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    a, b = np.abs(d0), np.abs(d1)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    if float(p).is_integer() and p <= 32:
        n = int(p)
        mean = sum(lo**k * hi ** (n - k) for k in range(n + 1)) / (n + 1)
    else:
        # mean of t**p over [lo, hi] as hi**p (1 - r**(p+1)) / ((p+1)(1 - r)) with r = lo/hi
        with np.errstate(divide="ignore", invalid="ignore"):
            log_r = np.log1p(-(hi - lo) / hi)
            ratio = np.expm1((p + 1) * log_r) / ((p + 1) * np.expm1(log_r))
        mean = np.where(hi == lo, hi**p, ratio * hi**p)
    with np.errstate(divide="ignore", invalid="ignore"):
        crossing = (a ** (p + 1) + b ** (p + 1)) / ((p + 1) * (a + b))
    opposite = (d0 * d1 < 0)
    return width * np.where(opposite, crossing, mean)


def match_quantiles(qa: Quantile, qb: Quantile, t_lo: float, t_hi: float):
    """Common refinement of two quantiles on ``[t_lo, t_hi]``.

    Returns ``t0, t1, a0, a1, b0, b1``: level chunks and the (linear) images
    of their endpoints under each quantile.
    """
    eps = LEVEL_RTOL * max(abs(t_hi), abs(t_lo), 1e-300)
    knots = np.union1d(qa.c, qb.c)
    knots = knots[(knots > t_lo + eps) & (knots < t_hi - eps)]
    if len(knots) > 1:
        # knots of the two quantiles that differ only by rounding give empty chunks
        knots = knots[np.concatenate([[True], np.diff(knots) > eps])]
    t = np.concatenate([[t_lo], knots, [t_hi]])
    t0, t1 = t[:-1], t[1:]
    keep = t1 > t0
    t0, t1 = t0[keep], t1[keep]
    mid = 0.5 * (t0 + t1)
    ka = np.clip(np.searchsorted(qa.c, mid, side="right") - 1, 0, len(qa.lo) - 1)
    kb = np.clip(np.searchsorted(qb.c, mid, side="right") - 1, 0, len(qb.lo) - 1)
    return t0, t1, qa.at(ka, t0), qa.at(ka, t1), qb.at(kb, t0), qb.at(kb, t1)


def monotone_transport(plus: Density, minus: Density, p: float) -> tuple[float, TransportPlan]:
    """p-th power cost and monotone plan between two balanced densities on the line."""
    qa, qb = Quantile.of(plus), Quantile.of(minus)
    m = min(qa.c[-1], qb.c[-1])
    t0, t1, x0, x1, y0, y1 = match_quantiles(qa, qb, 0.0, m)
    cost = abs_power_integral(x0 - y0, x1 - y1, t1 - t0, p)
    zeros = np.zeros(len(t0), dtype=int)
    plan = TransportPlan(zeros, x0, x1, zeros, y0, y1, t1 - t0, cost)
    return float(np.sum(cost)), plan


def transport_line(plus: Density, minus: Density, p: float) -> LineResult:
    p = check_p(p)
    plus, minus = balance(plus, minus)
    cost_p, plan = monotone_transport(plus, minus, p)
    return LineResult(cost_p ** (1.0 / p), plan)


def _require_interval(f: StepFunction):
    if not isinstance(f.domain, Interval):
        raise DomainError(f"expected a function on an interval, got {f.domain!r}")


def wasserstein_interval(f: StepFunction, p: float) -> LineResult:
    """W_p(f+, f-) on an interval with the monotone plan.

    Raises
    ------
    ImbalanceError
        If the integral of ``f`` exceeds ``1e-9`` times its L1 norm.
    DegenerateError
        If ``f`` vanishes identically.
    """
    _require_interval(f)
    plus, minus = split_densities((q.start, q.end, q.value) for q in f.pieces)
    return transport_line(plus, minus, p)


def cdf_w1(plus: Density, minus: Density) -> float:
    """W_1 as the L1 distance between the two cumulative distribution functions."""

    def cdf_knots(d: Density):
        xs = np.column_stack([d.lo, d.hi]).ravel()
        c = d.knots()
        return xs, np.column_stack([c[:-1], c[1:]]).ravel()

    xp, fp = cdf_knots(plus)
    xm, fm = cdf_knots(minus)
    x = np.union1d(xp, xm)
    diff = np.interp(x, xp, fp) - np.interp(x, xm, fm)
    return float(np.sum(abs_power_integral(diff[:-1], diff[1:], np.diff(x), 1.0)))


def wasserstein_w1_cdf(f: StepFunction) -> float:
    _require_interval(f)
    plus, minus = balance(*split_densities((q.start, q.end, q.value) for q in f.pieces))
    return cdf_w1(plus, minus)
