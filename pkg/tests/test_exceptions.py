"""Tests for the exceptions module."""

import pytest

from cascada.exceptions import (
    EXIT_CODE_FOR_EXCEPTION,
    CascadaError,
    CorridorError,
    CyclicCascadeError,
    DocumentValidationError,
    DuplicateCandidateError,
    EdgeNotFoundError,
    GraphError,
    InstanceValidationError,
    InvalidBudgetError,
    KernelError,
    NoIncumbentError,
    SolverError,
    SpecValidationError,
    StrategyError,
    UsageError,
    ValidationError,
    exit_code_for,
)


def test_instance_validation_error():
    """Test InstanceValidationError keeps every violation and summarizes five."""
    violations = [f"problem {i}" for i in range(7)]

    error = InstanceValidationError(violations)

    assert error.violations == violations
    assert str(error) == (
        "Invalid instance: problem 0; problem 1; problem 2; problem 3; problem 4 (+2 more)"
    )
    assert isinstance(error, ValidationError)
    assert isinstance(error, CascadaError)


def test_document_validation_error():
    """Test DocumentValidationError with and without details."""
    error = DocumentValidationError("bad", {"field": "nodes"})
    assert error.errors == {"field": "nodes"}

    error = DocumentValidationError("bad")
    assert error.errors == {}


def test_graph_errors():
    """Test graph errors carry the offending ids."""
    edge = EdgeNotFoundError(3, 4)
    assert (edge.src, edge.dst) == (3, 4)
    assert str(edge) == "Edge (3, 4) not found"

    duplicate = DuplicateCandidateError(9)
    assert duplicate.node == 9
    assert isinstance(duplicate, GraphError)


def test_cyclic_cascade_error():
    """Test the cycle is rendered as a path."""
    error = CyclicCascadeError(2, [(1, 5), (5, 1)])

    assert error.scenario == 2
    assert error.cycle == [(1, 5), (5, 1)]
    assert str(error) == "Cascade 2 is not acyclic: 1 -> 5 -> 1"
    assert isinstance(error, SolverError)


def test_invalid_budget_error():
    """Test InvalidBudgetError keeps the budget."""
    error = InvalidBudgetError(-2.5)

    assert error.budget == -2.5
    assert "got -2.5" in str(error)


@pytest.mark.parametrize(
    ("exc", "code"),
    [
        (UsageError("x"), 1),
        (ValueError("x"), 1),
        (InvalidBudgetError(-1.0), 1),
        (InstanceValidationError(["x"]), 2),
        (SpecValidationError("x"), 2),
        (DocumentValidationError("x"), 2),
        (StrategyError("x"), 2),
        (KernelError("x"), 2),
        (CorridorError("x"), 2),
        (CyclicCascadeError(0, []), 2),
        (NoIncumbentError("x"), 3),
        (RuntimeError("x"), 1),
    ],
)
def test_exit_codes(exc, code):
    """Test the most specific class decides the exit code."""
    assert exit_code_for(exc) == code


def test_exit_code_table_covers_categories():
    """Test every exit code category is in the table."""
    assert set(EXIT_CODE_FOR_EXCEPTION.values()) == {1, 2, 3}
