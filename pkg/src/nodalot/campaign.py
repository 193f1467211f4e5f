"""Seeded randomized verification campaigns over the transport and reduction routines."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .domain import Star
from .errors import InvalidInputError, NodalotError, UnsupportedCaseError
from .minimizers import minimize_spec, sharp_lower_bound
from .oracle import oracle_wasserstein
from .reductions import adjacency_predicate, concentrate_to_steps, shift_to_adjacent
from .sampling import random_spec, random_vertex_split_star, random_x
from .star import check_plan_monotonicity
from .step import ClassSpec, class_membership, effective_nodal_set
from .transport import wasserstein

CHECKS = ("bound", "reduction", "sharpness", "oracle", "monotonicity")
DOMAIN_KINDS = ("interval", "circle", "star")
P_VALUES = (1.0, 1.5, 2.0, 3.0)
BOUND_SLACK = 1e-8
COST_SLACK = 1e-10
STAR_EDGES = (0.2, 0.8)
NODAL_ATOL = 1e-12


class Outcome(NamedTuple):
    trial: int
    check: str
    status: str  # "pass", "fail" or "skip"
    margin: float
    detail: str = ""


@dataclass
class CheckSummary:
    runs: int = 0
    violations: int = 0
    skipped: int = 0
    worst_margin: float = math.inf

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "violations": self.violations,
            "skipped": self.skipped,
            "worst_margin": None if math.isinf(self.worst_margin) else self.worst_margin,
        }


@dataclass
class CampaignReport:
    trials: int
    seed: int
    checks: tuple[str, ...]
    domain_kinds: tuple[str, ...]
    summary: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(s.violations == 0 for s in self.summary.values())

    @property
    def min_bound_slack(self) -> float | None:
        s = self.summary.get("bound")
        return None if s is None or math.isinf(s.worst_margin) else s.worst_margin

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "trials": self.trials,
            "seed": self.seed,
            "checks": list(self.checks),
            "domain_kinds": list(self.domain_kinds),
            "min_bound_slack": self.min_bound_slack,
            "summary": {k: v.to_json() for k, v in self.summary.items()},
            "failures": [o._asdict() for o in self.failures],
        }


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _sample(rng: np.random.Generator, kind: str):
    """A random function of X on a domain of ``kind`` together with its class parameters."""
    if kind == "star":
        f = random_vertex_split_star(rng, int(rng.integers(2, 6)), float(rng.uniform(0.5, 2.0)), edge_range=STAR_EDGES)
        l1, c_inf, _ = f.norms()
        return f, ClassSpec(c_inf, l1, len(effective_nodal_set(f)), f.domain)
    spec = random_spec(rng, kind)
    return random_x(rng, spec), spec


def _check_bound(f, spec, p, h):
    bound = sharp_lower_bound(spec, p)
    slack = wasserstein(f, p, h).value - bound
    return slack >= -BOUND_SLACK, slack, f"W_p = {slack + bound!r}, bound = {bound!r}"


def _check_reduction(f, spec, p, h):
    conc = concentrate_to_steps(f, p, h)
    g = conc.output
    margin = conc.input_cost - conc.output_cost
    problems = []
    if margin < -COST_SLACK:
        problems.append("concentration increased the cost")
    if not class_membership(g, spec).in_xs:
        problems.append("concentration left X_s")
    if not effective_nodal_set(g).same_locations(effective_nodal_set(f), NODAL_ATOL):
        problems.append("concentration moved a nodal point")
    if not isinstance(f.domain, Star):
        shift = shift_to_adjacent(g, p)
        margin = min(margin, shift.input_cost - shift.output_cost)
        if shift.output_cost > shift.input_cost + COST_SLACK:
            problems.append("shift increased the cost")
        if len(effective_nodal_set(shift.output)) != spec.n_nodal:
            problems.append("shift changed the number of nodal points")
        if not adjacency_predicate(wasserstein(shift.output, p).plan, effective_nodal_set(shift.output)):
            problems.append("shifted plan is not adjacent")
    return not problems, margin, "; ".join(problems)


def _check_sharpness(f, spec, p, h):
    res = minimize_spec(spec, p)
    w = wasserstein(res.f_star, p, h)
    err = abs(w.value - res.value)
    tol = max(BOUND_SLACK * max(1.0, res.value), w.error_bound)
    ok = err <= tol and class_membership(res.f_star, spec).in_xs
    return ok, -err, f"minimizer value {res.value!r}, transport {w.value!r}"


def _check_oracle(f, spec, p, h):
    exact = wasserstein(f, p, h)
    approx = oracle_wasserstein(f, p, h).value
    err = abs(exact.value - approx)
    return err <= 3 * h, 3 * h - err, f"exact {exact.value!r}, oracle {approx!r}"


def _check_monotonicity(f, spec, p, h):
    if not isinstance(f.domain, Star):
        raise UnsupportedCaseError("plan monotonicity is a star property")
    plan = oracle_wasserstein(f, p, h).plan
    bad = check_plan_monotonicity(plan, f.domain)
    return not bad, -float(len(bad)), f"{len(bad)} violating pairs"


_RUNNERS = {
    "bound": _check_bound,
    "reduction": _check_reduction,
    "sharpness": _check_sharpness,
    "oracle": _check_oracle,
    "monotonicity": _check_monotonicity,
}


def run_trial(seed: int, index: int, checks: tuple[str, ...], kinds: tuple[str, ...], h: float) -> list[Outcome]:
    rng = trial_rng(seed, index)
    kind = kinds[int(rng.integers(len(kinds)))]
    p = P_VALUES[int(rng.integers(len(P_VALUES)))]
    f, spec = _sample(rng, kind)
    out = []
    for name in checks:
        try:
            ok, margin, detail = _RUNNERS[name](f, spec, p, h)
            out.append(Outcome(index, name, "pass" if ok else "fail", float(margin), "" if ok else f"{kind}, p={p}: {detail}"))
        except UnsupportedCaseError as exc:
            out.append(Outcome(index, name, "skip", math.inf, str(exc)))
        except NodalotError as exc:
            out.append(Outcome(index, name, "fail", -math.inf, f"{kind}, p={p}: {type(exc).__name__}: {exc}"))
    return out


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("NODALOT_THREADS", "1")))
    except ValueError:
        return 1


def run_campaign(
    trials: int, seed: int, checks=CHECKS, domain_kinds=DOMAIN_KINDS, h: float = 2e-3, max_failures: int = 20
) -> CampaignReport:
    """Run ``trials`` seeded trials; results do not depend on the worker count (``NODALOT_THREADS``)."""
    checks = tuple(checks)
    kinds = tuple(domain_kinds)
    unknown = [c for c in checks if c not in CHECKS] + [k for k in kinds if k not in DOMAIN_KINDS]
    if unknown:
        raise InvalidInputError(f"unknown checks or domain kinds: {unknown}")
    report = CampaignReport(trials, seed, checks, kinds, {c: CheckSummary() for c in checks})
    if trials <= 0:
        return report
    args = [(seed, i, checks, kinds, h) for i in range(trials)]
    workers = _workers()
    if workers == 1:
        results = [run_trial(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, *zip(*args), chunksize=max(1, trials // (4 * workers))))
    for outcomes in results:
        for o in outcomes:
            s = report.summary[o.check]
            if o.status == "skip":
                s.skipped += 1
                continue
            s.runs += 1
            s.worst_margin = min(s.worst_margin, o.margin)
            if o.status == "fail":
                s.violations += 1
                if len(report.failures) < max_failures:
                    report.failures.append(o)
    return report
