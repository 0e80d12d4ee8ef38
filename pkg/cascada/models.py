"""
Configuration models for Cascada.

This module defines the run configuration dataclasses used throughout the
library. Every model validates itself on construction.
"""

from dataclasses import dataclass
from enum import Enum


class GreedyVariant(str, Enum):
    """Scoring rule of the greedy baselines."""

    UC = "uc"  # uniform cost: raw marginal gain
    CB = "cb"  # cost-benefit: gain per unit cost

    @classmethod
    def _missing_(cls, value: object) -> "GreedyVariant | None":
        if isinstance(value, str):
            for member in cls:
                if member.value == value.lower():
                    return member
        return None


class EvalMode(str, Enum):
    """How the greedy baselines obtain the cascades they score on."""

    FRESH = "fresh"
    REUSE = "reuse"
    REUSE_PRE = "reuse+pre"
    REUSE_PRE_REPEAT = "reuse+pre+repeat"

    @classmethod
    def _missing_(cls, value: object) -> "EvalMode | None":
        # reuse_pre_repeat and friends
        if isinstance(value, str):
            for member in cls:
                if member.value == value.lower().replace("_", "+"):
                    return member
        return None


@dataclass(frozen=True)
class KernelParams:
    """
    Colonization kernel parameters.

    Args:
        r0: Foraging radius in meters; pairs within it use the 1/C_i branch
        alpha: Long-range scale factor
        gamma: Long-range decay rate in 1/meters
    """

    r0: float = 3000.0
    alpha: float = 0.1
    gamma: float = 7.69e-4

    def __post_init__(self) -> None:
        """Validate configuration values."""
        if self.r0 < 0:
            raise ValueError("r0 must be non-negative")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")


@dataclass(frozen=True)
class SaaConfig:
    """
    Configuration for the replicated SAA procedure.

    Args:
        m: Number of independent SAA replications
        n: Training cascades per replication
        n_valid: Validation cascades used to pick the final candidate
        n_test: Test cascades used for the lower bound
        budget: Budget override (None uses the instance budget)
        seed: Global seed all streams derive from
        node_limit: Branch-and-bound node limit per replication
        preprocess: Whether training cascades are reduced before solving
        jobs: Worker processes for sampling and replications
    """

    m: int = 10
    n: int = 10
    n_valid: int = 500
    n_test: int = 500
    budget: float | None = None
    seed: int = 0
    node_limit: int | None = None
    preprocess: bool = True
    jobs: int = 1

    def __post_init__(self) -> None:
        """Validate configuration values."""
        for name in ("m", "n", "n_valid", "n_test"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be non-negative")
        if self.node_limit is not None and self.node_limit < 0:
            raise ValueError("node_limit must be non-negative")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


@dataclass(frozen=True)
class GreedyConfig:
    """
    Configuration for the greedy baselines.

    Args:
        variant: UC (raw gain) or CB (gain per cost)
        eval_mode: Where the scoring cascades come from
        n: Number of training cascades
        budget: Budget override (None uses the instance budget)
        seed: Global seed all streams derive from
    """

    variant: GreedyVariant = GreedyVariant.CB
    eval_mode: EvalMode = EvalMode.REUSE_PRE_REPEAT
    n: int = 100
    budget: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate configuration values."""
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be non-negative")
        object.__setattr__(self, "variant", GreedyVariant(self.variant))
        object.__setattr__(self, "eval_mode", EvalMode(self.eval_mode))
