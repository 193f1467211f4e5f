"""Supported domains (interval, unit circle, star graph) and their geodesic distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi
POINT_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    length: float

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0):
            raise DomainError(f"interval length must be positive, got {self.length!r}")

    @property
    def kind(self) -> str:
        return "interval"

    @property
    def edge_lengths(self) -> tuple[float, ...]:
        return (float(self.length),)

    @property
    def measure(self) -> float:
        return float(self.length)


@dataclass(frozen=True)
class Circle:
    """The unit circle, parametrized by arc length in [0, 2*pi)."""

    @property
    def kind(self) -> str:
        return "circle"

    @property
    def circumference(self) -> float:
        return TWO_PI

    @property
    def edge_lengths(self) -> tuple[float, ...]:
        return (TWO_PI,)

    @property
    def measure(self) -> float:
        return TWO_PI


@dataclass(frozen=True)
class Star:
    """D segments glued at a common vertex; coordinate 0 on every edge is the vertex."""

    edges: tuple[float, ...]

    def __post_init__(self):
        edges = tuple(float(x) for x in self.edges)
        if len(edges) < 2:
            raise DomainError(f"a star needs at least 2 edges, got {len(edges)}")
        if not all(math.isfinite(x) and x > 0 for x in edges):
            raise DomainError(f"star edge lengths must be positive, got {edges!r}")
        object.__setattr__(self, "edges", edges)

    @property
    def kind(self) -> str:
        return "star"

    @property
    def degree(self) -> int:
        return len(self.edges)

    @property
    def edge_lengths(self) -> tuple[float, ...]:
        return self.edges

    @property
    def measure(self) -> float:
        return float(sum(self.edges))


Domain = Union[Interval, Circle, Star]


class DomainPoint(NamedTuple):
    edge: int
    coord: float


VERTEX = DomainPoint(0, 0.0)


def check_point(domain: Domain, a: DomainPoint) -> DomainPoint:
    """Validate ``a`` against ``domain`` and return it in canonical form."""
    edge, x = int(a[0]), float(a[1])
    lengths = domain.edge_lengths
    if not 0 <= edge < len(lengths):
        raise DomainError(f"edge {edge} does not exist on {domain!r}")
    if not math.isfinite(x) or x < -POINT_TOL or x > lengths[edge] + POINT_TOL:
        if isinstance(domain, Circle) and math.isfinite(x):
            x = x % TWO_PI
        else:
            raise DomainError(f"coordinate {x!r} outside edge {edge} of {domain!r}")
    x = min(max(x, 0.0), lengths[edge])
    if isinstance(domain, Circle) and x >= TWO_PI:
        x = 0.0
    if isinstance(domain, Star) and x <= POINT_TOL:
        return VERTEX
    return DomainPoint(edge, x)


def geodesic_distance(domain: Domain, a: DomainPoint, b: DomainPoint) -> float:
    """Length of the shortest path between two points of ``domain``."""
    a = check_point(domain, a)
    b = check_point(domain, b)
    return float(distance_matrix(domain, [a.edge], [a.coord], [b.edge], [b.coord])[0, 0])


def distance_matrix(domain: Domain, edges_a, coords_a, edges_b, coords_b) -> np.ndarray:
    """Pairwise geodesic distances between two point clouds (no validation)."""
    xa = np.asarray(coords_a, dtype=float)[:, None]
    xb = np.asarray(coords_b, dtype=float)[None, :]
    if isinstance(domain, Interval):
        return np.abs(xa - xb)
    if isinstance(domain, Circle):
        delta = np.mod(xa - xb, TWO_PI)
        return np.minimum(delta, TWO_PI - delta)
    if isinstance(domain, Star):
        ea = np.asarray(edges_a)[:, None]
        eb = np.asarray(edges_b)[None, :]
        return np.where(ea == eb, np.abs(xa - xb), xa + xb)
    raise DomainError(f"unknown domain {domain!r}")


def domain_to_json(domain: Domain) -> dict:
    if isinstance(domain, Interval):
        return {"kind": "interval", "length": domain.length}
    if isinstance(domain, Circle):
        return {"kind": "circle"}
    if isinstance(domain, Star):
        return {"kind": "star", "edges": list(domain.edges)}
    raise DomainError(f"unknown domain {domain!r}")


def domain_from_json(data: dict) -> Domain:
    try:
        kind = data["kind"]
        if kind == "interval":
            return Interval(float(data["length"]))
        if kind == "circle":
            return Circle()
        if kind == "star":
            return Star(tuple(float(x) for x in data["edges"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed domain description {data!r}") from exc
    raise DomainError(f"unknown domain kind {data.get('kind')!r}")
