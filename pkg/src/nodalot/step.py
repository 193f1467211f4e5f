"""Piecewise-constant functions on a domain, their nodal sets and class membership."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .domain import (
    POINT_TOL,
    TWO_PI,
    VERTEX,
    Circle,
    Domain,
    DomainPoint,
    Interval,
    Star,
    distance_matrix,
    domain_from_json,
    domain_to_json,
)
from .errors import InfeasibleSpecError, ParityError, StepFunctionError

ZERO_RTOL = 1e-12
CLASS_TOL = 1e-9


class Piece(NamedTuple):
    edge: int
    start: float
    end: float
    value: float

    @property
    def length(self) -> float:
        return self.end - self.start


class StepFunction:
    """A piecewise-constant function, normalized so every edge is partitioned.

    Pieces may be given sparsely; uncovered parts of an edge are filled with
    zero, adjacent pieces with equal values are merged, and values below
    ``1e-12 * max|value|`` are set to zero. On the circle a piece may run past
    ``2*pi`` and is wrapped.
    """

    __slots__ = ("domain", "pieces", "_arrays")

    def __init__(self, domain: Domain, pieces: Iterable):
        self.domain = domain
        self.pieces = _normalize(domain, [Piece(int(p[0]), float(p[1]), float(p[2]), float(p[3])) for p in pieces])
        self._arrays = None

    @classmethod
    def zero(cls, domain: Domain) -> "StepFunction":
        return cls(domain, [])

    # -- accessors ---------------------------------------------------------

    def edge_pieces(self, edge: int) -> list[Piece]:
        return [p for p in self.pieces if p.edge == edge]

    def edge_arrays(self, edge: int) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints (n+1) and values (n) of one edge."""
        if self._arrays is None:
            arrays = []
            for e in range(len(self.domain.edge_lengths)):
                ps = self.edge_pieces(e)
                breaks = np.array([ps[0].start] + [p.end for p in ps])
                arrays.append((breaks, np.array([p.value for p in ps])))
            self._arrays = arrays
        return self._arrays[edge]

    def __call__(self, edge: int, x: float) -> float:
        """Right-continuous evaluation."""
        breaks, values = self.edge_arrays(edge)
        k = int(np.searchsorted(breaks, x, side="right")) - 1
        return float(values[min(max(k, 0), len(values) - 1)])

    @property
    def support_edges(self) -> tuple[int, ...]:
        return tuple(sorted({p.edge for p in self.pieces if p.value != 0.0}))

    def norms(self) -> tuple[float, float, float]:
        """(L1 norm, sup norm, integral)."""
        if not self.pieces:
            return 0.0, 0.0, 0.0
        lengths = np.array([p.length for p in self.pieces])
        values = np.array([p.value for p in self.pieces])
        return float(np.sum(np.abs(values) * lengths)), float(np.max(np.abs(values))), float(np.sum(values * lengths))

    def masses(self) -> tuple[float, float]:
        """Total mass of the positive part and of the negative part."""
        plus = sum(p.value * p.length for p in self.pieces if p.value > 0)
        minus = sum(-p.value * p.length for p in self.pieces if p.value < 0)
        return float(plus), float(minus)

    # -- transformations -----------------------------------------------------

    def map_values(self, fn) -> "StepFunction":
        return StepFunction(self.domain, [(p.edge, p.start, p.end, fn(p.value)) for p in self.pieces])

    def scaled(self, a: float) -> "StepFunction":
        return self.map_values(lambda v: a * v)

    def __neg__(self) -> "StepFunction":
        return self.scaled(-1.0)

    def positive_part(self) -> "StepFunction":
        return self.map_values(lambda v: max(v, 0.0))

    def negative_part(self) -> "StepFunction":
        return self.map_values(lambda v: max(-v, 0.0))

    def dilated(self, s: float) -> "StepFunction":
        """Stretch space by ``s`` (interval and star only)."""
        if isinstance(self.domain, Circle):
            raise StepFunctionError("the circle has fixed circumference; rotate instead")
        if isinstance(self.domain, Interval):
            domain = Interval(self.domain.length * s)
        else:
            domain = Star(tuple(L * s for L in self.domain.edges))
        return StepFunction(domain, [(p.edge, p.start * s, p.end * s, p.value) for p in self.pieces])

    def rotated(self, theta: float) -> "StepFunction":
        """Circle only: ``g(x) = f(x - theta)``."""
        if not isinstance(self.domain, Circle):
            raise StepFunctionError("rotation is defined on the circle only")
        shift = theta % TWO_PI
        return StepFunction(self.domain, [(0, p.start + shift, p.end + shift, p.value) for p in self.pieces])

    def reflected(self) -> "StepFunction":
        """``x -> L - x`` on the interval, ``x -> -x`` on the circle."""
        if isinstance(self.domain, Star):
            raise StepFunctionError("reflection is defined on the interval and circle only")
        L = self.domain.edge_lengths[0]
        return StepFunction(self.domain, [(0, L - p.end, L - p.start, p.value) for p in self.pieces])

    def __add__(self, other: "StepFunction") -> "StepFunction":
        if other.domain != self.domain:
            raise StepFunctionError("cannot add functions on different domains")
        pieces = []
        for e in range(len(self.domain.edge_lengths)):
            b1, v1 = self.edge_arrays(e)
            b2, v2 = other.edge_arrays(e)
            breaks = np.union1d(b1, b2)
            mids = 0.5 * (breaks[:-1] + breaks[1:])
            vals = v1[_locate(b1, mids)] + v2[_locate(b2, mids)]
            pieces += [(e, a, b, v) for a, b, v in zip(breaks[:-1], breaks[1:], vals)]
        return StepFunction(self.domain, pieces)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self + (-other)

    def allclose(self, other: "StepFunction", tol: float = 1e-12) -> bool:
        if self.domain != other.domain:
            return False
        diff = self - other
        return all(abs(p.value) <= tol for p in diff.pieces)

    def __eq__(self, other) -> bool:
        return isinstance(other, StepFunction) and self.domain == other.domain and self.pieces == other.pieces

    def __hash__(self):
        return hash((self.domain, self.pieces))

    def __repr__(self) -> str:
        nz = [p for p in self.pieces if p.value != 0.0]
        return f"StepFunction({self.domain!r}, nonzero={nz!r})"

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "domain": domain_to_json(self.domain),
            "pieces": [[p.edge, p.start, p.end, p.value] for p in self.pieces],
        }

    @classmethod
    def from_json(cls, data: dict) -> "StepFunction":
        try:
            domain = domain_from_json(data["domain"])
            pieces = [tuple(row) for row in data["pieces"]]
            if any(len(row) != 4 for row in pieces):
                raise StepFunctionError("each piece must be [edge, start, end, value]")
        except (KeyError, TypeError) as exc:
            raise StepFunctionError(f"malformed step function: {exc}") from exc
        return cls(domain, pieces)


def _locate(breaks: np.ndarray, x: np.ndarray) -> np.ndarray:
    k = np.searchsorted(breaks, x, side="right") - 1
    return np.clip(k, 0, len(breaks) - 2)


def _normalize(domain: Domain, pieces: list[Piece]) -> tuple[Piece, ...]:
    lengths = domain.edge_lengths
    for p in pieces:
        if not (math.isfinite(p.start) and math.isfinite(p.end) and math.isfinite(p.value)):
            raise StepFunctionError(f"non-finite piece {p!r}")
        if not 0 <= p.edge < len(lengths):
            raise StepFunctionError(f"piece {p!r} refers to a missing edge")
        if p.end < p.start - POINT_TOL:
            raise StepFunctionError(f"piece {p!r} has end < start")
    if isinstance(domain, Circle):
        pieces = _unwrap_circle(pieces)

    cinf = max((abs(p.value) for p in pieces), default=0.0)
    zero_tol = ZERO_RTOL * cinf
    out: list[Piece] = []
    for e, L in enumerate(lengths):
        tol = POINT_TOL * max(1.0, L)
        ps = sorted((p for p in pieces if p.edge == e and p.end - p.start > tol), key=lambda p: p.start)
        cursor = 0.0
        merged: list[list] = []

        def push(a, b, v):
            v = 0.0 if abs(v) <= zero_tol else v
            if merged and merged[-1][2] == v:
                merged[-1][1] = b
            else:
                merged.append([a, b, v])

        for p in ps:
            if p.start < -tol or p.end > L + tol:
                raise StepFunctionError(f"piece {p!r} leaves edge {e} of length {L}")
            start = max(p.start, 0.0)
            if start < cursor - tol:
                raise StepFunctionError(f"overlapping pieces on edge {e} near {p.start}")
            if start > cursor + tol:
                push(cursor, start, 0.0)
            else:
                start = cursor
            cursor = min(p.end, L)
            if L - cursor <= tol:
                cursor = L
            push(start, cursor, p.value)
        if cursor < L:
            push(cursor, L, 0.0)
        out.extend(Piece(e, a, b, v) for a, b, v in merged)
    return tuple(out)


def _unwrap_circle(pieces: list[Piece]) -> list[Piece]:
    out = []
    for p in pieces:
        length = p.end - p.start
        if length >= TWO_PI - POINT_TOL:
            out.append(Piece(0, 0.0, TWO_PI, p.value))
            continue
        start = p.start % TWO_PI
        end = start + length
        if end > TWO_PI + POINT_TOL:
            out.append(Piece(0, start, TWO_PI, p.value))
            out.append(Piece(0, 0.0, end - TWO_PI, p.value))
        else:
            out.append(Piece(0, start, min(end, TWO_PI), p.value))
    return out


# -- nodal sets ----------------------------------------------------------------


class NodalKind(str, enum.Enum):
    Z1 = "Z1"
    Z2 = "Z2"


class NodalPoint(NamedTuple):
    point: DomainPoint
    kind: NodalKind


@dataclass(frozen=True)
class NodalSet:
    domain: Domain
    points: tuple[NodalPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def locations(self) -> list[DomainPoint]:
        return [p.point for p in self.points]

    def coords(self) -> np.ndarray:
        return np.array([p.point.coord for p in self.points])

    def same_locations(self, other: "NodalSet", atol: float = 1e-12) -> bool:
        """Same number of points, pairwise within geodesic distance ``atol``."""
        if len(self) != len(other):
            return False
        if not self.points:
            return True
        a, b = self.locations, other.locations
        d = distance_matrix(self.domain, [q.edge for q in a], [q.coord for q in a], [q.edge for q in b], [q.coord for q in b])
        return bool(np.all(np.diag(d) <= atol))

    def contains_vertex(self) -> bool:
        return isinstance(self.domain, Star) and any(p.point == VERTEX for p in self.points)


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def _scan(runs, start_sign: int = 0):
    """Walk (start, end, sign) runs left to right; yield (coordinate, kind).

    ``start_sign`` is the sign already seen before the first run (used on
    star edges whose first signed region belongs to the vertex component).
    """
    last = start_sign
    plateau_start = None
    for a, b, s in runs:
        if s == 0:
            if last != 0 and plateau_start is None:
                plateau_start = a
            continue
        if last != 0 and s != last:
            if plateau_start is None:
                yield a, NodalKind.Z1
            else:
                yield plateau_start, NodalKind.Z2
        last = s
        plateau_start = None


def effective_nodal_set(f: StepFunction) -> NodalSet:
    """Sign-change interfaces plus one point per zero plateau separating opposite signs.

    A plateau is represented by its endpoint next to the signed region that
    precedes it in edge orientation. On the star the zero component that
    contains the vertex is represented by the vertex itself.
    """
    domain = f.domain
    runs_by_edge = [[(p.start, p.end, _sign(p.value)) for p in f.edge_pieces(e)] for e in range(len(domain.edge_lengths))]
    points: list[NodalPoint] = []

    if isinstance(domain, Interval):
        points = [NodalPoint(DomainPoint(0, x), k) for x, k in _scan(runs_by_edge[0])]
    elif isinstance(domain, Circle):
        points = _circle_nodal(runs_by_edge[0])
    else:
        points = _star_nodal(runs_by_edge)
    points.sort(key=lambda q: (q.point.edge, q.point.coord))
    return NodalSet(domain, tuple(points))


def _circle_nodal(runs) -> list[NodalPoint]:
    first = next((i for i, r in enumerate(runs) if r[2] != 0), None)
    if first is None:
        return []
    # unroll starting at the first signed run; the wrap-around is then an ordinary scan step
    rolled = runs[first:] + [(a + TWO_PI, b + TWO_PI, s) for a, b, s in runs[:first]]
    closing = (rolled[-1][1], rolled[-1][1], rolled[0][2])
    found = list(_scan(rolled + [closing]))
    out = []
    for x, k in found:
        x = x % TWO_PI
        out.append(NodalPoint(DomainPoint(0, 0.0 if x > TWO_PI - POINT_TOL else x), k))
    return out


def _star_nodal(runs_by_edge) -> list[NodalPoint]:
    direct = set()  # signs of edges whose first piece is signed
    via_zero = set()  # first signed region reached through the vertex zero component
    has_vertex_zero = False
    points = []
    for e, runs in enumerate(runs_by_edge):
        signed = [i for i, r in enumerate(runs) if r[2] != 0]
        if not signed:
            has_vertex_zero = True
            continue
        i0 = signed[0]
        s0 = runs[i0][2]
        if i0 == 0:
            direct.add(s0)
        else:
            has_vertex_zero = True
            via_zero.add(s0)
        points += [NodalPoint(DomainPoint(e, x), k) for x, k in _scan(runs[i0 + 1 :], start_sign=s0)]
    if len(direct) == 2:
        points.append(NodalPoint(VERTEX, NodalKind.Z1))
    elif has_vertex_zero and len(direct | via_zero) == 2:
        points.append(NodalPoint(VERTEX, NodalKind.Z2))
    return points


# -- function classes ----------------------------------------------------------


@dataclass(frozen=True)
class ClassSpec:
    """Parameters of the class of zero-mean functions with prescribed norms and nodal count."""

    c_inf: float
    c_1: float
    n_nodal: int
    domain: Domain

    def __post_init__(self):
        if not (self.c_inf > 0 and self.c_1 > 0 and math.isfinite(self.c_inf) and math.isfinite(self.c_1)):
            raise InfeasibleSpecError(f"norms must be positive: c_inf={self.c_inf}, c_1={self.c_1}")
        if int(self.n_nodal) != self.n_nodal or self.n_nodal < 1:
            raise InfeasibleSpecError(f"nodal count must be a positive integer, got {self.n_nodal}")
        object.__setattr__(self, "n_nodal", int(self.n_nodal))
        if self.c_1 > self.c_inf * self.domain.measure * (1 + 1e-12):
            raise InfeasibleSpecError(
                f"c_1={self.c_1} exceeds c_inf * |domain| = {self.c_inf * self.domain.measure}"
            )

    def require_even_on_circle(self):
        if isinstance(self.domain, Circle) and self.n_nodal % 2:
            raise ParityError(f"a zero-mean function on the circle has an even number of sign changes, got N={self.n_nodal}")


class Verdict(str, enum.Enum):
    IN_XS = "InXs"
    IN_X = "InX"
    NOT_IN_X = "NotInX"


@dataclass(frozen=True)
class Membership:
    verdict: Verdict
    reasons: tuple[str, ...] = field(default_factory=tuple)

    @property
    def in_x(self) -> bool:
        return self.verdict in (Verdict.IN_X, Verdict.IN_XS)

    @property
    def in_xs(self) -> bool:
        return self.verdict is Verdict.IN_XS


def class_membership(f: StepFunction, spec: ClassSpec, tol: float = CLASS_TOL) -> Membership:
    if f.domain != spec.domain:
        return Membership(Verdict.NOT_IN_X, ("domain differs from the class domain",))
    l1, linf, integral = f.norms()
    nodal = effective_nodal_set(f)
    reasons = []
    if abs(linf - spec.c_inf) > tol * max(1.0, spec.c_inf):
        reasons.append(f"sup norm {linf!r} != c_inf {spec.c_inf!r}")
    if abs(l1 - spec.c_1) > tol * max(1.0, spec.c_1):
        reasons.append(f"L1 norm {l1!r} != c_1 {spec.c_1!r}")
    if abs(integral) > tol * max(1.0, spec.c_1):
        reasons.append(f"integral {integral!r} != 0")
    if len(nodal) != spec.n_nodal:
        reasons.append(f"|Z(f)| = {len(nodal)} != N = {spec.n_nodal}")
    if reasons:
        return Membership(Verdict.NOT_IN_X, tuple(reasons))
    why = _xs_violation(f, nodal, spec.c_inf, tol)
    if why is None:
        return Membership(Verdict.IN_XS)
    return Membership(Verdict.IN_X, (why,))


def signed_runs(f: StepFunction) -> list[Piece]:
    """Maximal runs of constant value; on the circle a run may wrap past 2*pi."""
    runs = list(f.pieces)
    if isinstance(f.domain, Circle) and len(runs) > 1 and runs[0].value == runs[-1].value:
        last = runs.pop()
        first = runs.pop(0)
        runs.append(Piece(0, last.start, first.end + TWO_PI, first.value))
    return runs


def _xs_violation(f: StepFunction, nodal: NodalSet, c_inf: float, tol: float) -> str | None:
    if any(p.kind is NodalKind.Z2 for p in nodal):
        return "a zero plateau separates opposite signs"
    pts = nodal.locations
    edges = np.array([p.edge for p in pts])
    coords = np.array([p.coord for p in pts])
    L = f.domain.edge_lengths
    for run in signed_runs(f):
        if run.value == 0.0:
            continue
        if abs(abs(run.value) - c_inf) > tol * c_inf:
            return f"value {run.value!r} on ({run.start}, {run.end}) is neither 0 nor +-c_inf"
        d = distance_matrix(f.domain, [run.edge, run.edge], [run.start, run.end], edges, coords)
        if d.size == 0 or d.min() > 1e-9 * max(1.0, max(L)):
            return f"run ({run.start}, {run.end}) on edge {run.edge} is not adjacent to a nodal point"
    return None
