"""Domain dispatch for W_p(f+, f-)."""

from __future__ import annotations

from typing import NamedTuple, Optional

from .circle import wasserstein_circle
from .domain import Circle, Interval, Star
from .errors import DomainError
from .line import wasserstein_interval
from .plan import TransportPlan
from .star import wasserstein_star
from .step import StepFunction


class WassersteinResult(NamedTuple):
    value: float
    plan: TransportPlan
    method: str
    error_bound: float = 0.0
    cut: Optional[float] = None

    def to_json(self, with_plan: bool = True) -> dict:
        out = {"value": self.value, "method": self.method, "error_bound": self.error_bound}
        if self.cut is not None:
            out["cut"] = self.cut
        if with_plan:
            out["plan"] = self.plan.to_json()
        return out


def wasserstein(f: StepFunction, p: float, h: float | None = None) -> WassersteinResult:
    """W_p(f+, f-) with an optimal plan; ``h`` is the oracle grid step for stars without an exact path."""
    if isinstance(f.domain, Interval):
        res = wasserstein_interval(f, p)
        return WassersteinResult(res.value, res.plan, "line")
    if isinstance(f.domain, Circle):
        res = wasserstein_circle(f, p)
        return WassersteinResult(res.value, res.plan, "circle", 0.0, res.cut)
    if isinstance(f.domain, Star):
        res = wasserstein_star(f, p, h)
        return WassersteinResult(res.value, res.plan, res.method, res.error_bound)
    raise DomainError(f"unknown domain {f.domain!r}")
