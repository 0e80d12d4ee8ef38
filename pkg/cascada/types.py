"""
Type definitions, protocols and document schemas for Cascada.

This module defines type aliases, protocols, and the pydantic models that
describe the JSON documents exchanged by the command line and the
serializers.
"""

from collections.abc import Sequence
from typing import Any, Protocol, runtime_checkable

import numpy as np
from pydantic import BaseModel, Field

# Dense identifiers; actions are numbered from 1
NodeId = int
ActionId = int

# Anything accepted as a seed: a single integer or an integer tuple
SeedKey = int | Sequence[int]

# (src, dst, prob)
EdgeTuple = tuple[int, int, float]


@runtime_checkable
class CostModel(Protocol):
    """Protocol for parcel pricing used by the spatial generators."""

    def __call__(self, patch_count: int, rng: np.random.Generator) -> float:
        """
        Price a parcel.

        Args:
            patch_count: Number of habitat patches in the parcel
            rng: Generator to draw noise from

        Returns:
            A non-negative cost
        """
        ...


class ActionDocument(BaseModel):
    """One purchasable action: a node set and its cost."""

    nodes: list[int]
    cost: float = Field(ge=0)
    label: str | None = None


class ParcelDocument(BaseModel):
    """A parcel in the ``metapop`` extension block."""

    patches: list[int]
    conserved: bool
    cost: float = Field(ge=0)
    label: str | None = None


class KernelDocument(BaseModel):
    """Colonization kernel parameters."""

    r0: float
    alpha: float
    gamma: float


class MetapopDocument(BaseModel):
    """The ``metapop`` extension block of an instance document."""

    positions: list[tuple[float, float]]
    occupied: list[int]
    extinction: list[float]
    colonization: list[tuple[int, int, float]]
    horizon: int = Field(ge=1)
    parcels: list[ParcelDocument]
    kernel: KernelDocument | None = None


class InstanceDocument(BaseModel):
    """The Instance JSON schema."""

    nodes: int = Field(ge=0)
    edges: list[EdgeTuple] = Field(default_factory=list)
    base_nodes: list[int] = Field(default_factory=list)
    actions: list[ActionDocument] = Field(default_factory=list)
    sources: list[int] = Field(default_factory=list)
    rewards: list[tuple[int, float]] = Field(default_factory=list)
    budget: float = 0.0
    labels: list[str | None] | None = None
    metapop: MetapopDocument | None = None
    seed: int | None = None


class CascadeDocument(BaseModel):
    """A sampled or reduced cascade; per-node arrays align with ``nodes``."""

    scenario_index: int
    seed: list[int] = Field(default_factory=list)
    nodes: list[int]
    edges: list[tuple[int, int]]
    sources: list[int]
    rewards: list[float]
    action_sets: list[list[int]]
    provenance: list[list[int]] | None = None


class CascadePoolDocument(BaseModel):
    """A file holding several cascades."""

    seed: int | None = None
    cascades: list[CascadeDocument]
    stats: dict[str, Any] | None = None


class StrategyDocument(BaseModel):
    """A purchase decision, with the seed of the run that chose it."""

    seed: int | None = None
    actions: list[int]
    n_actions: int = Field(ge=0)
    cost: float = 0.0


class EvaluationDocument(BaseModel):
    """Monte Carlo estimate of one strategy's expected reward."""

    seed: int
    actions: list[int]
    n: int
    mean: float
    stderr: float
