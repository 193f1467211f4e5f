"""Transport plans as columns of matched (source segment, target segment, mass) triples."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Segment(NamedTuple):
    edge: int
    start: float
    end: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.start + self.end)


class Move(NamedTuple):
    src: Segment
    dst: Segment
    mass: float
    cost: float


_COLUMNS = ("src_edge", "src_start", "src_end", "dst_edge", "dst_start", "dst_end", "mass", "cost")


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Column storage; ``cost`` holds each move's contribution to the p-th power cost.

    Atoms (discrete plans) are segments with ``start == end``.
    """

    src_edge: np.ndarray
    src_start: np.ndarray
    src_end: np.ndarray
    dst_edge: np.ndarray
    dst_start: np.ndarray
    dst_end: np.ndarray
    mass: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        n = len(self.mass)
        for name in _COLUMNS:
            arr = np.asarray(getattr(self, name), dtype=int if name.endswith("edge") else float)
            if arr.shape != (n,):
                raise ValueError(f"column {name} has shape {arr.shape}, expected ({n},)")
            object.__setattr__(self, name, arr)

    @classmethod
    def empty(cls) -> "TransportPlan":
        return cls(*(np.zeros(0) for _ in _COLUMNS))

    @classmethod
    def concat(cls, plans) -> "TransportPlan":
        plans = list(plans)
        if not plans:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, c) for p in plans]) for c in _COLUMNS))

    def __len__(self) -> int:
        return len(self.mass)

    @property
    def total_cost_p(self) -> float:
        return float(np.sum(self.cost))

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.mass))

    @property
    def src_mid(self) -> np.ndarray:
        return 0.5 * (self.src_start + self.src_end)

    @property
    def dst_mid(self) -> np.ndarray:
        return 0.5 * (self.dst_start + self.dst_end)

    @property
    def moves(self) -> list[Move]:
        return [
            Move(Segment(int(a), float(b), float(c)), Segment(int(d), float(e), float(f)), float(m), float(k))
            for a, b, c, d, e, f, m, k in zip(*(getattr(self, c) for c in _COLUMNS))
        ]

    def select(self, mask) -> "TransportPlan":
        return TransportPlan(*(getattr(self, c)[mask] for c in _COLUMNS))

    def with_edges(self, src_edge, dst_edge) -> "TransportPlan":
        return TransportPlan(
            np.broadcast_to(src_edge, self.mass.shape), self.src_start, self.src_end,
            np.broadcast_to(dst_edge, self.mass.shape), self.dst_start, self.dst_end,
            self.mass, self.cost,
        )

    def to_json(self) -> dict:
        return {
            "total_cost_p": self.total_cost_p,
            "moves": [[int(a), float(b), float(c), int(d), float(e), float(f), float(m), float(k)]
                      for a, b, c, d, e, f, m, k in zip(*(getattr(self, c) for c in _COLUMNS))],
        }
