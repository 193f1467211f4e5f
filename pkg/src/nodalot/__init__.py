"""Wasserstein-p transport between the positive and negative parts of step functions
on intervals, circles and star graphs, with minimizers and cost-decreasing reductions."""

from __future__ import annotations

from .domain import Circle, DomainPoint, Interval, Star, domain_from_json, domain_to_json, geodesic_distance
from .errors import (
    DegenerateError,
    DomainError,
    ImbalanceError,
    InfeasibleSpecError,
    InvalidInputError,
    NodalotError,
    ParityError,
    PreconditionError,
    SolverError,
    StepFunctionError,
    UnsupportedCaseError,
)
from .circle import wasserstein_circle
from .line import wasserstein_interval
from .minimizers import (
    MinimizerResult,
    minimize_circle,
    minimize_interval,
    minimize_spec,
    minimize_star_closed_form,
    minimize_star_numeric,
    minimize_star_short_edge_D3,
    sharp_lower_bound,
)
from .oracle import OracleResult, oracle_wasserstein
from .plan import TransportPlan
from .reductions import ReductionReport, adjacency_predicate, concentrate_to_steps, shift_to_adjacent
from .star import check_plan_monotonicity, fold_to_line, wasserstein_star
from .step import ClassSpec, NodalSet, StepFunction, class_membership, effective_nodal_set
from .transport import WassersteinResult, wasserstein

__version__ = "0.1.0"

__all__ = [
    "Circle",
    "ClassSpec",
    "DegenerateError",
    "DomainError",
    "DomainPoint",
    "ImbalanceError",
    "InfeasibleSpecError",
    "Interval",
    "InvalidInputError",
    "MinimizerResult",
    "NodalSet",
    "NodalotError",
    "OracleResult",
    "ParityError",
    "PreconditionError",
    "ReductionReport",
    "SolverError",
    "Star",
    "StepFunction",
    "StepFunctionError",
    "TransportPlan",
    "UnsupportedCaseError",
    "WassersteinResult",
    "adjacency_predicate",
    "check_plan_monotonicity",
    "class_membership",
    "concentrate_to_steps",
    "domain_from_json",
    "domain_to_json",
    "effective_nodal_set",
    "fold_to_line",
    "geodesic_distance",
    "minimize_circle",
    "minimize_interval",
    "minimize_spec",
    "minimize_star_closed_form",
    "minimize_star_numeric",
    "minimize_star_short_edge_D3",
    "oracle_wasserstein",
    "shift_to_adjacent",
    "sharp_lower_bound",
    "wasserstein",
    "wasserstein_circle",
    "wasserstein_interval",
    "wasserstein_star",
]
