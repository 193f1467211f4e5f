"""Command-line interface: ``nodalot <command> ...``.

Exit codes: 0 success, 1 property violation or solver failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .campaign import CHECKS, DOMAIN_KINDS, run_campaign
from .domain import Circle, Interval, Star
from .errors import InvalidInputError, NodalotError
from .minimizers import (
    bump_value,
    minimize_interval,
    minimize_circle,
    minimize_spec,
    minimize_star_closed_form,
    minimize_star_numeric,
    odd_vertex_multiplicity,
    short_edge_threshold,
    short_edge_value,
)
from .oracle import default_grid_step, oracle_wasserstein
from .reductions import concentrate_to_steps, shift_to_adjacent
from .step import ClassSpec, StepFunction
from .transport import wasserstein

EXIT_OK, EXIT_VIOLATION, EXIT_INVALID = 0, 1, 2


def _emit(data) -> None:
    json.dump(data, sys.stdout, indent=2, sort_keys=False)
    sys.stdout.write("\n")


def _read_function(path: str) -> StepFunction:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read step function from {path!r}: {exc}") from exc
    return StepFunction.from_json(data)


def _domain(args) -> object:
    if args.domain == "interval":
        return Interval(args.length)
    if args.domain == "circle":
        return Circle()
    if not args.edges:
        raise InvalidInputError("--edges is required for a star")
    try:
        edges = tuple(float(x) for x in args.edges.split(","))
    except ValueError as exc:
        raise InvalidInputError(f"bad --edges {args.edges!r}") from exc
    return Star(edges)


def cmd_minimize(args) -> int:
    spec = ClassSpec(args.cinf, args.c1, args.n, _domain(args))
    if args.method == "numeric":
        if not isinstance(spec.domain, Star):
            raise InvalidInputError("--method numeric applies to stars")
        res = minimize_star_numeric(spec, args.p, seed=args.seed)
    elif args.method == "closed-form":
        if isinstance(spec.domain, Interval):
            res = minimize_interval(spec, args.p)
        elif isinstance(spec.domain, Circle):
            res = minimize_circle(spec, args.p)
        else:
            res = minimize_star_closed_form(spec, args.p)
    else:
        res = minimize_spec(spec, args.p)
    if args.f_star:
        Path(args.f_star).write_text(json.dumps(res.f_star.to_json(), indent=2) + "\n")
    _emit(res.to_json())
    return EXIT_OK


def cmd_wasserstein(args) -> int:
    f = _read_function(args.input)
    _emit(wasserstein(f, args.p, args.h).to_json(with_plan=args.plan))
    return EXIT_OK


def cmd_reduce(args) -> int:
    f = _read_function(args.input)
    if args.mode == "shift":
        report = shift_to_adjacent(f, args.p)
        _emit({"shift": report.to_json()})
        return EXIT_OK
    conc = concentrate_to_steps(f, args.p, args.h)
    out = {"concentrate": conc.to_json()}
    if args.mode == "both":
        out["shift"] = shift_to_adjacent(conc.output, args.p).to_json()
    _emit(out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    f = _read_function(args.input)
    h = args.h if args.h is not None else default_grid_step(f)
    res = oracle_wasserstein(f, args.p, h)
    out = {"value": res.value, "h": h, "min_reduced_cost": res.min_reduced_cost, "iterations": res.iterations}
    if args.plan:
        out["plan"] = res.plan.to_json()
    _emit(out)
    return EXIT_OK


def _csv_list(text: str, allowed) -> tuple[str, ...]:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in items if s not in allowed]
    if bad:
        raise InvalidInputError(f"unknown entries {bad}; choose from {list(allowed)}")
    return items


def cmd_verify(args) -> int:
    report = run_campaign(
        args.trials,
        args.seed,
        _csv_list(args.checks, CHECKS),
        _csv_list(args.domain_kinds, DOMAIN_KINDS),
        args.h,
    )
    _emit(report.to_json())
    return EXIT_OK if report.ok else EXIT_VIOLATION


def sweep_beta_rows(n: int, points: int, c_inf: float = 1.0, c_1: float = 1.0) -> list[tuple[float, float, float, float]]:
    """Rows ``(beta, short-edge value, odd long-edge value, interval value)`` on ``[0, 1/(3n+1)]``."""
    if n < 1 or points < 2:
        raise InvalidInputError("need --n >= 1 and --points >= 2")
    long_odd = bump_value(c_1, c_inf, n - 1 + odd_vertex_multiplicity(3), 1.0)
    interval = bump_value(c_1, c_inf, n, 1.0)
    betas = np.linspace(0.0, short_edge_threshold(n), points)
    return [(float(b), short_edge_value(c_1, c_inf, n, float(b)), long_odd, interval) for b in betas]


def cmd_sweep_beta(args) -> int:
    rows = sweep_beta_rows(args.n, args.points, args.cinf, args.c1)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["beta", "short_edge", "long_edge_odd", "interval"])
    for row in rows:
        writer.writerow([format(v, ".17g") for v in row])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nodalot", description="Optimal transport between the signed parts of step functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    m = sub.add_parser("minimize", help="minimizer and minimum value of W_p over a class")
    m.add_argument("--domain", choices=("interval", "circle", "star"), required=True)
    m.add_argument("--length", type=float, default=1.0, help="interval length")
    m.add_argument("--edges", help="comma-separated star edge lengths")
    m.add_argument("--cinf", type=float, required=True)
    m.add_argument("--c1", type=float, required=True)
    m.add_argument("--n", type=int, required=True, help="number of nodal points")
    m.add_argument("--p", type=float, default=1.0)
    m.add_argument("--method", choices=("auto", "closed-form", "numeric"), default="auto")
    m.add_argument("--seed", type=int, default=0, help="seed of the numeric star solver")
    m.add_argument("--f-star", metavar="PATH", help="also write the minimizer as a step-function JSON file")
    m.set_defaults(func=cmd_minimize)

    w = sub.add_parser("wasserstein", help="W_p between the positive and negative parts")
    w.add_argument("--input", default="-", help="step-function JSON file, '-' for stdin")
    w.add_argument("--p", type=float, default=1.0)
    w.add_argument("--h", type=float, default=None, help="oracle grid step for general stars")
    w.add_argument("--plan", action="store_true", help="include the transport plan")
    w.set_defaults(func=cmd_wasserstein)

    r = sub.add_parser("reduce", help="concentration and adjacency-shift reductions")
    r.add_argument("--input", default="-")
    r.add_argument("--p", type=float, default=1.0)
    r.add_argument("--h", type=float, default=None)
    r.add_argument("--mode", choices=("concentrate", "shift", "both"), default="both")
    r.set_defaults(func=cmd_reduce)

    o = sub.add_parser("oracle", help="discretized brute-force W_p")
    o.add_argument("--input", default="-")
    o.add_argument("--p", type=float, default=1.0)
    o.add_argument("--h", type=float, default=None, help="grid step (default 1e-3 c_1/c_inf)")
    o.add_argument("--plan", action="store_true")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="seeded randomized property campaign")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--checks", default="bound,reduction", help=f"comma list from {','.join(CHECKS)}")
    v.add_argument("--domain-kinds", default="interval", help=f"comma list from {','.join(DOMAIN_KINDS)}")
    v.add_argument("--h", type=float, default=2e-3, help="oracle grid step")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep-beta", help="CSV of the three-edge short-edge cost against beta")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--points", type=int, default=21)
    s.add_argument("--cinf", type=float, default=1.0)
    s.add_argument("--c1", type=float, default=1.0)
    s.set_defaults(func=cmd_sweep_beta)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        _emit({"error": {"kind": exc.kind, "message": str(exc)}})
        return EXIT_INVALID
    except NodalotError as exc:
        _emit({"error": {"kind": exc.kind, "message": str(exc)}})
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
