from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from nodalot import Circle, Interval, Star, StepFunction

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def interval_fn(length: float, *pieces) -> StepFunction:
    """``interval_fn(1, (0, 0.5, 1), (0.5, 1, -1))``."""
    return StepFunction(Interval(length), [(0, a, b, v) for a, b, v in pieces])


def circle_fn(*pieces) -> StepFunction:
    return StepFunction(Circle(), [(0, a, b, v) for a, b, v in pieces])


def star_fn(edges, *pieces) -> StepFunction:
    """Pieces are ``(edge, start, end, value)``."""
    return StepFunction(Star(tuple(edges)), pieces)


@pytest.fixture(scope="session", autouse=True)
def _compiled_oracle():
    from nodalot.oracle import warm_up

    warm_up()
