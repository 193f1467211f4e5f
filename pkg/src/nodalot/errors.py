"""Exception hierarchy shared by every module."""

from __future__ import annotations


class NodalotError(Exception):
    """Base class; ``kind`` is the machine-readable tag used by the CLI."""

    kind = "error"


class InvalidInputError(NodalotError, ValueError):
    kind = "invalid_input"


class DomainError(InvalidInputError):
    kind = "domain_mismatch"


class StepFunctionError(InvalidInputError):
    kind = "invalid_step_function"


class ImbalanceError(InvalidInputError):
    kind = "imbalance"


class DegenerateError(InvalidInputError):
    kind = "degenerate"


class InfeasibleSpecError(InvalidInputError):
    kind = "infeasible"


class ParityError(InfeasibleSpecError):
    kind = "parity"


class PreconditionError(InvalidInputError):
    kind = "precondition"


class UnsupportedCaseError(InvalidInputError):
    kind = "unsupported_case"


class SolverError(NodalotError, RuntimeError):
    kind = "solver_failure"
