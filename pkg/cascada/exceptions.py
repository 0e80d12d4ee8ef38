"""
Exception hierarchy for Cascada.

This module defines all exceptions that can be raised by the library,
organized in a clear hierarchy for easy handling, plus the table that maps
them to command-line exit codes.
"""

from collections.abc import Sequence
from typing import Any


class CascadaError(Exception):
    """Base exception for all Cascada errors."""

    pass


class UsageError(CascadaError):
    """Raised when a command is invoked with inconsistent arguments."""

    pass


class ValidationError(CascadaError):
    """Base exception for validation errors."""

    pass


class InstanceValidationError(ValidationError):
    """Raised when an instance violates its invariants."""

    def __init__(self, violations: Sequence[str]) -> None:
        self.violations = list(violations)
        summary = "; ".join(self.violations[:5])
        if len(self.violations) > 5:
            summary += f" (+{len(self.violations) - 5} more)"
        super().__init__(f"Invalid instance: {summary}")


class SpecValidationError(ValidationError):
    """Raised when a metapopulation spec is inconsistent."""

    pass


class DocumentValidationError(ValidationError):
    """Raised when a JSON document cannot be parsed into a model object."""

    def __init__(self, message: str, errors: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.errors = errors or {}


class GraphError(CascadaError):
    """Base exception for graph and strategy manipulation errors."""

    pass


class EdgeNotFoundError(GraphError):
    """Raised when a gadget refers to an edge the instance does not have."""

    def __init__(self, src: int, dst: int) -> None:
        self.src = src
        self.dst = dst
        super().__init__(f"Edge ({src}, {dst}) not found")


class DuplicateCandidateError(GraphError):
    """Raised when a source candidate is listed twice."""

    def __init__(self, node: int) -> None:
        self.node = node
        super().__init__(f"Duplicate source candidate: {node}")


class StrategyError(GraphError):
    """Raised when a strategy does not match the instance's action range."""

    pass


class ModelError(CascadaError):
    """Base exception for cascade model errors."""

    pass


class KernelError(ModelError):
    """Raised when the colonization kernel is evaluated on contradictory inputs."""

    pass


class SolverError(CascadaError):
    """Base exception for optimization errors."""

    pass


class CyclicCascadeError(SolverError):
    """Raised when a cascade handed to the MIP builder contains a cycle."""

    def __init__(self, scenario: int, cycle: Sequence[tuple[int, int]]) -> None:
        self.scenario = scenario
        self.cycle = list(cycle)
        path = " -> ".join(str(u) for u, _ in self.cycle)
        if self.cycle:
            path += f" -> {self.cycle[-1][1]}"
        super().__init__(f"Cascade {scenario} is not acyclic: {path}")


class InvalidBudgetError(SolverError):
    """Raised when a negative budget is handed to a solver."""

    def __init__(self, budget: float) -> None:
        self.budget = budget
        super().__init__(f"Budget must be non-negative, got {budget}")


class NoIncumbentError(SolverError):
    """Raised when the node limit was reached before any strategy was evaluated."""

    pass


class GeneratorError(CascadaError):
    """Base exception for instance generator errors."""

    pass


class GeometryError(GeneratorError):
    """Raised when the study area is degenerate."""

    pass


class CorridorError(GeneratorError):
    """Raised when a reservoir/corridor layout cannot be carved from a spec."""

    pass


EXIT_CODE_FOR_EXCEPTION: dict[type[Exception], int] = {
    UsageError: 1,
    ValueError: 1,
    ValidationError: 2,
    GraphError: 2,
    ModelError: 2,
    GeneratorError: 2,
    CyclicCascadeError: 2,
    InvalidBudgetError: 1,
    NoIncumbentError: 3,
}


def exit_code_for(exc: BaseException) -> int:
    """
    Map an exception to a command-line exit code.

    The most specific class in the table wins, so ``NoIncumbentError`` maps
    to 3 even though it is also a ``SolverError``.

    Args:
        exc: The exception that terminated the command

    Returns:
        The exit code (1 when nothing more specific applies)
    """
    for klass in type(exc).__mro__:
        if klass in EXIT_CODE_FOR_EXCEPTION:
            return EXIT_CODE_FOR_EXCEPTION[klass]
    return 1
