"""
Metapopulation model.

A metapopulation is a set of habitat patches whose occupancy evolves through
local extinction and colonization between patches. Occupancy is a
non-progressive cascade: a patch can go extinct and be recolonized later. The
layered graph replicates every patch once per time step, which turns the
process into a progressive cascade the rest of the library can optimize over.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial.distance import cdist

from cascada._internal.seeding import Stream, derive_rng
from cascada.cascade import evaluate_on_sample, sample_cascade
from cascada.core import Action, Edge, Instance, Strategy
from cascada.exceptions import KernelError, SpecValidationError
from cascada.models import KernelParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Patch:
    """A habitat patch at planar coordinates in meters."""

    x: float
    y: float
    occupied: bool = False


@dataclass(frozen=True)
class Parcel:
    """A land unit grouping patches; conserved parcels are free."""

    patches: tuple[int, ...]
    conserved: bool
    cost: float = 0.0
    label: str | None = None


@dataclass(frozen=True)
class MetapopSpec:
    """
    A metapopulation conservation problem.

    Args:
        patches: Patch positions and initial occupancy
        extinction: Per-patch extinction probability (beta)
        colonization: Sparse ``(i, j, p)`` colonization probabilities, ``i != j``
        horizon: Number of time steps T
        parcels: Partition of the patches into parcels
        kernel: Kernel the colonization probabilities came from, if any
        budget: Purchase budget carried into the layered instance
    """

    patches: tuple[Patch, ...]
    extinction: tuple[float, ...]
    colonization: tuple[tuple[int, int, float], ...]
    horizon: int
    parcels: tuple[Parcel, ...]
    kernel: KernelParams | None = None
    budget: float = 0.0

    def __post_init__(self) -> None:
        """Validate the spec."""
        n = len(self.patches)
        if self.horizon < 1:
            raise SpecValidationError(f"horizon must be at least 1, got {self.horizon}")
        if len(self.extinction) != n:
            raise SpecValidationError(f"expected {n} extinction values, got {len(self.extinction)}")
        for i, beta in enumerate(self.extinction):
            if not 0.0 <= beta <= 1.0:
                raise SpecValidationError(f"extinction of patch {i} out of range: {beta}")

        seen_pairs: set[tuple[int, int]] = set()
        for i, j, p in self.colonization:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise SpecValidationError(f"invalid colonization pair ({i}, {j})")
            if not 0.0 <= p <= 1.0:
                raise SpecValidationError(f"colonization ({i}, {j}) out of range: {p}")
            if (i, j) in seen_pairs:
                raise SpecValidationError(f"duplicate colonization pair ({i}, {j})")
            seen_pairs.add((i, j))

        owner = [-1] * n
        for index, parcel in enumerate(self.parcels):
            if not parcel.patches:
                raise SpecValidationError(f"parcel {index} is empty")
            if parcel.cost < 0:
                raise SpecValidationError(f"parcel {index} has negative cost")
            for patch in parcel.patches:
                if not 0 <= patch < n:
                    raise SpecValidationError(f"parcel {index} references unknown patch {patch}")
                if owner[patch] >= 0:
                    raise SpecValidationError(
                        f"patch {patch} is in parcels {owner[patch]} and {index}"
                    )
                owner[patch] = index
        missing = [i for i, o in enumerate(owner) if o < 0]
        if missing:
            raise SpecValidationError(f"patches not covered by any parcel: {missing[:10]}")
        if self.budget < 0:
            raise SpecValidationError("budget must be non-negative")

    @property
    def n_patches(self) -> int:
        """Number of patches."""
        return len(self.patches)

    @cached_property
    def positions(self) -> np.ndarray:
        """Patch coordinates as an ``(n, 2)`` array."""
        return np.array([(p.x, p.y) for p in self.patches], dtype=float).reshape(-1, 2)

    @cached_property
    def priced_parcels(self) -> tuple[int, ...]:
        """Parcel indices in action order: action ``l`` is parcel ``priced_parcels[l - 1]``."""
        return tuple(i for i, parcel in enumerate(self.parcels) if not parcel.conserved)

    @cached_property
    def probability_matrix(self) -> np.ndarray:
        """Dense colonization matrix ``P[i, j]``."""
        matrix = np.zeros((self.n_patches, self.n_patches), dtype=float)
        for i, j, p in self.colonization:
            matrix[i, j] = p
        return matrix

    def available_patches(self, y: Strategy | None = None) -> np.ndarray:
        """
        Boolean mask of patches on conserved or purchased parcels.

        Args:
            y: Strategy over the priced parcels (None buys all of them)
        """
        mask = np.zeros(self.n_patches, dtype=bool)
        bought = set(y.actions) if y is not None else None
        for action, index in enumerate(self.priced_parcels, start=1):
            if bought is None or action in bought:
                mask[list(self.parcels[index].patches)] = True
        for parcel in self.parcels:
            if parcel.conserved:
                mask[list(parcel.patches)] = True
        return mask


def colonization_prob(
    i: Patch,
    j: Patch,
    r0: float,
    alpha: float,
    gamma: float,
    neighbor_count_i: int,
) -> float:
    """
    Colonization probability from patch ``i`` to patch ``j``.

    Pairs within the foraging radius share colonization evenly among the
    ``C_i`` neighbors of ``i``; beyond it the probability decays
    exponentially with distance.

    Args:
        i: Source patch
        j: Target patch
        r0: Foraging radius in meters
        alpha: Long-range scale factor
        gamma: Long-range decay in 1/meters
        neighbor_count_i: Patches ``j != i`` within ``r0`` of ``i``

    Returns:
        The probability, clamped to [0, 1]

    Raises:
        KernelError: If ``j`` lies within ``r0`` but ``neighbor_count_i`` is 0
    """
    distance = float(np.hypot(i.x - j.x, i.y - j.y))
    if distance <= r0:
        if neighbor_count_i < 1:
            raise KernelError(
                f"Neighbor count is {neighbor_count_i} but a patch lies within r0={r0}"
            )
        prob = 1.0 / neighbor_count_i
    else:
        prob = alpha * float(np.exp(-gamma * distance))
    return min(max(prob, 0.0), 1.0)


def colonization_matrix(positions: np.ndarray, kernel: KernelParams) -> np.ndarray:
    """
    Dense kernel probabilities between all patch pairs.

    Args:
        positions: ``(n, 2)`` coordinates in meters
        kernel: Kernel parameters

    Returns:
        ``(n, n)`` matrix with a zero diagonal
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = positions.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    distances = cdist(positions, positions)
    near = distances <= kernel.r0
    np.fill_diagonal(near, False)
    counts = near.sum(axis=1)

    short = 1.0 / np.maximum(counts, 1)[:, None]
    long = kernel.alpha * np.exp(-kernel.gamma * distances)
    matrix = np.where(near, short, long)
    np.fill_diagonal(matrix, 0.0)
    return np.clip(matrix, 0.0, 1.0)


def kernel_colonization(
    positions: np.ndarray,
    kernel: KernelParams,
    min_prob: float = 0.0,
) -> tuple[tuple[int, int, float], ...]:
    """
    Sparse colonization triples from the kernel.

    Args:
        positions: ``(n, 2)`` coordinates in meters
        kernel: Kernel parameters
        min_prob: Pairs with probability at or below this are dropped

    Returns:
        ``(i, j, p)`` triples in row-major order
    """
    matrix = colonization_matrix(positions, kernel)
    rows, cols = np.nonzero(matrix > min_prob)
    return tuple(
        (int(i), int(j), float(matrix[i, j])) for i, j in zip(rows, cols, strict=True)
    )


def layer_node(spec: MetapopSpec, patch: int, step: int) -> int:
    """Node id of ``patch`` at time ``step`` in the layered graph."""
    return step * spec.n_patches + patch


def layered_graph(spec: MetapopSpec) -> Instance:
    """
    Expand a metapopulation into its time-layered progressive instance.

    Node ``t * n + i`` stands for patch ``i`` at time ``t``, so node ids are
    a topological order. Rewards are 1 on the final layer.

    Args:
        spec: The metapopulation

    Returns:
        The layered instance; action ``l`` buys parcel ``spec.priced_parcels[l - 1]``
        in every layer
    """
    n = spec.n_patches
    horizon = spec.horizon
    edges: list[Edge] = []
    for step in range(horizon):
        here = step * n
        there = (step + 1) * n
        for i, beta in enumerate(spec.extinction):
            survive = 1.0 - beta
            if survive > 0:
                edges.append(Edge(here + i, there + i, survive))
        for i, j, p in spec.colonization:
            if p > 0:
                edges.append(Edge(here + i, there + j, p))

    def replicate(patches: Sequence[int]) -> frozenset[int]:
        return frozenset(step * n + i for step in range(horizon + 1) for i in patches)

    base: set[int] = set()
    actions: list[Action] = []
    for index, parcel in enumerate(spec.parcels):
        nodes = replicate(parcel.patches)
        if parcel.conserved:
            base |= nodes
        else:
            actions.append(Action(nodes, parcel.cost, parcel.label or f"parcel {index}"))

    num_nodes = n * (horizon + 1)
    rewards = [0.0] * num_nodes
    for i in range(n):
        rewards[horizon * n + i] = 1.0

    logger.debug(
        "Layered graph: %d nodes, %d edges, %d actions", num_nodes, len(edges), len(actions)
    )
    return Instance(
        num_nodes=num_nodes,
        edges=tuple(edges),
        base_nodes=frozenset(base),
        actions=tuple(actions),
        sources=frozenset(i for i, patch in enumerate(spec.patches) if patch.occupied),
        rewards=tuple(rewards),
        budget=spec.budget,
        labels=tuple(f"{i}@{t}" for t in range(horizon + 1) for i in range(n)),
    )


@dataclass
class OccupancyRun:
    """Occupancy history of a batch of direct simulations."""

    occupied: np.ndarray
    history: list[np.ndarray] = field(default_factory=list)

    @property
    def counts(self) -> np.ndarray:
        """Occupied-patch count per run at the final step."""
        return self.occupied.sum(axis=1)


def simulate_occupancy(
    spec: MetapopSpec,
    rng: np.random.Generator,
    runs: int = 1,
    y: Strategy | None = None,
    keep_history: bool = False,
) -> OccupancyRun:
    """
    Simulate the non-progressive occupancy process directly.

    Each step, an occupied patch survives with probability ``1 - beta_i``
    and every occupied patch ``i`` colonizes ``j`` with probability
    ``p_ij``. A patch that goes extinct stays occupied if it is colonized in
    the same step. Only patches on conserved or purchased parcels can be
    occupied.

    Args:
        spec: The metapopulation
        rng: Random generator
        runs: Independent runs simulated together
        y: Strategy over priced parcels (None buys everything)
        keep_history: Record the occupancy after every step

    Returns:
        Final occupancy, shape ``(runs, n_patches)``
    """
    n = spec.n_patches
    allowed = spec.available_patches(y)
    survive = 1.0 - np.asarray(spec.extinction, dtype=float)
    matrix = spec.probability_matrix

    initial = np.array([p.occupied for p in spec.patches], dtype=bool) & allowed
    occupied = np.tile(initial, (runs, 1))
    history = [occupied.copy()] if keep_history else []
    for _ in range(spec.horizon):
        stays = occupied & (rng.random((runs, n)) < survive)
        attempts = rng.random((runs, n, n)) < matrix
        colonized = (occupied[:, :, None] & attempts).any(axis=1)
        occupied = (stays | colonized) & allowed
        if keep_history:
            history.append(occupied.copy())
    return OccupancyRun(occupied=occupied, history=history)


def occupancy_distribution(
    spec: MetapopSpec,
    runs: int,
    seed: int,
    method: str = "direct",
    y: Strategy | None = None,
) -> np.ndarray:
    """
    Histogram of the occupied-patch count at the horizon.

    Args:
        spec: The metapopulation
        runs: Number of simulations
        seed: Global seed
        method: ``"direct"`` for the non-progressive simulator or
            ``"layered"`` for live-edge sampling on the layered graph
        y: Strategy over priced parcels (None buys everything)

    Returns:
        Array of length ``n_patches + 1``; entry ``c`` counts runs that
        ended with ``c`` occupied patches
    """
    n = spec.n_patches
    if method == "direct":
        rng = derive_rng(seed, Stream.SIMULATION)
        counts = simulate_occupancy(spec, rng, runs=runs, y=y).counts
    elif method == "layered":
        instance = layered_graph(spec)
        strategy = y if y is not None else Strategy.for_instance(
            instance, range(1, instance.n_actions + 1)
        )
        stream = (seed, Stream.SIMULATION)
        counts = np.array(
            [
                round(evaluate_on_sample(sample_cascade(instance, k, stream), strategy))
                for k in range(runs)
            ],
            dtype=np.int64,
        )
    else:
        raise ValueError(f"Unknown simulation method: {method}")
    return np.bincount(counts.astype(np.int64), minlength=n + 1)
