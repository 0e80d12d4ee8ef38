"""
Cascada - stochastic network design on independent-cascade networks.

This library chooses which node sets to buy under a budget so that a
probabilistic cascade from the sources reaches as much reward as possible.
It samples live-edge scenarios, compresses them, solves the sampled problem
exactly inside a replicated sample average approximation, and provides the
greedy baselines and instance generators to compare against.
"""

from cascada.cascade import (
    CascadeSample,
    estimate_objective,
    evaluate_on_sample,
    sample_cascade,
    sample_cascades,
)
from cascada.core import Action, Edge, Instance, Strategy, ValidationReport, validate
from cascada.exceptions import (
    CascadaError,
    CorridorError,
    CyclicCascadeError,
    DocumentValidationError,
    DuplicateCandidateError,
    EdgeNotFoundError,
    GeneratorError,
    GeometryError,
    GraphError,
    InstanceValidationError,
    InvalidBudgetError,
    KernelError,
    ModelError,
    NoIncumbentError,
    SolverError,
    SpecValidationError,
    StrategyError,
    UsageError,
    ValidationError,
)
from cascada.greedy import GreedyTrace, greedy_select
from cascada.metapop import MetapopSpec, Parcel, Patch, layered_graph
from cascada.mip import MipModel, SolveResult, build_mip, export_standard, solve_exact
from cascada.models import EvalMode, GreedyConfig, GreedyVariant, KernelParams, SaaConfig
from cascada.preprocess import ReducedCascade, reduce
from cascada.saa import SaaReport, budget_sweep, gap_vs_training_size, run_saa

__version__ = "0.1.0"

__all__ = [
    # Data model
    "Instance",
    "Edge",
    "Action",
    "Strategy",
    "ValidationReport",
    "validate",
    "MetapopSpec",
    "Patch",
    "Parcel",
    "layered_graph",
    # Cascades
    "CascadeSample",
    "ReducedCascade",
    "sample_cascade",
    "sample_cascades",
    "evaluate_on_sample",
    "estimate_objective",
    "reduce",
    # Solvers
    "MipModel",
    "SolveResult",
    "build_mip",
    "solve_exact",
    "export_standard",
    "SaaReport",
    "run_saa",
    "budget_sweep",
    "gap_vs_training_size",
    "GreedyTrace",
    "greedy_select",
    # Configuration
    "KernelParams",
    "SaaConfig",
    "GreedyConfig",
    "GreedyVariant",
    "EvalMode",
    # Exceptions
    "CascadaError",
    "UsageError",
    "ValidationError",
    "InstanceValidationError",
    "SpecValidationError",
    "DocumentValidationError",
    "GraphError",
    "EdgeNotFoundError",
    "DuplicateCandidateError",
    "StrategyError",
    "ModelError",
    "KernelError",
    "SolverError",
    "CyclicCascadeError",
    "InvalidBudgetError",
    "NoIncumbentError",
    "GeneratorError",
    "GeometryError",
    "CorridorError",
]
