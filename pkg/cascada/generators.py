"""
Deterministic instance builders.

Every builder is a pure function of its arguments and seed: the
non-submodularity gadget, random spatial metapopulations, the distant
reservoir relabelling, a corridor layout that forces greedy myopia, and
small random networks for property tests.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from cascada._internal.seeding import Stream, derive_rng
from cascada.core import Action, Edge, Instance
from cascada.exceptions import CorridorError, GeneratorError, GeometryError
from cascada.metapop import MetapopSpec, Parcel, Patch, kernel_colonization
from cascada.models import KernelParams
from cascada.types import CostModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProportionalCost:
    """Cost proportional to the patch count with uniform relative noise."""

    base: float = 1.0
    noise: float = 0.2

    def __post_init__(self) -> None:
        if self.base < 0:
            raise ValueError("base must be non-negative")
        if not 0 <= self.noise < 1:
            raise ValueError("noise must be in [0, 1)")

    def __call__(self, patch_count: int, rng: np.random.Generator) -> float:
        return self.base * patch_count * (1.0 + rng.uniform(-self.noise, self.noise))


def figure2(c: int, budget: float = 2.0) -> Instance:
    """
    The non-submodularity gadget.

    Node 0 is a free source. Actions 1 and 2 each own two nodes fed by the
    source, action 3 owns one, and action 4 owns ``c`` nodes fed only by
    action 3's node. All edges are certain, costs are one and every
    action-owned node has reward one.

    Args:
        c: Size of the payoff behind action 3
        budget: Purchase budget

    Returns:
        The instance
    """
    if c < 1:
        raise ValueError("c must be at least 1")
    gate = 5
    tail = list(range(6, 6 + c))
    edges = [Edge(0, v, 1.0) for v in (1, 2, 3, 4, gate)]
    edges += [Edge(gate, v, 1.0) for v in tail]
    actions = (
        Action(frozenset({1, 2}), 1.0, "a1"),
        Action(frozenset({3, 4}), 1.0, "a2"),
        Action(frozenset({gate}), 1.0, "a3"),
        Action(frozenset(tail), 1.0, "a4"),
    )
    num_nodes = 6 + c
    return Instance(
        num_nodes=num_nodes,
        edges=tuple(edges),
        base_nodes=frozenset({0}),
        actions=actions,
        sources=frozenset({0}),
        rewards=(0.0,) + (1.0,) * (num_nodes - 1),
        budget=float(budget),
        labels=("s", "a1.1", "a1.2", "a2.1", "a2.2", "a3", *(f"a4.{i}" for i in range(1, c + 1))),
    )


def _grid_parcels(positions: np.ndarray, n_parcels: int, area: float) -> list[tuple[int, ...]]:
    """Split patches into contiguous parcels along a snake walk over grid cells."""
    cells = max(1, math.ceil(math.sqrt(n_parcels)))
    size = area / cells
    cx = np.clip((positions[:, 0] // size).astype(int), 0, cells - 1)
    cy = np.clip((positions[:, 1] // size).astype(int), 0, cells - 1)
    snake = np.where(cy % 2 == 0, cx, cells - 1 - cx)
    order = np.lexsort((positions[:, 0], snake, cy))
    return [tuple(sorted(int(i) for i in chunk)) for chunk in np.array_split(order, n_parcels)]


def spatial_metapop(
    n_patches: int = 100,
    n_parcels: int = 20,
    area: float = 20000.0,
    occupancy_rate: float = 0.5,
    kernel: KernelParams | None = None,
    beta: float = 0.29,
    horizon: int = 10,
    cost_model: CostModel | None = None,
    seed: int = 0,
    conserved_fraction: float = 0.2,
    budget: float | None = None,
    min_prob: float = 1e-4,
) -> MetapopSpec:
    """
    A random metapopulation on a square study area.

    Patches are uniform on the square; parcels are consecutive runs of a
    snake walk over grid cells. A seeded subset of parcels is conserved and
    holds the initially occupied patches.

    Args:
        n_patches: Number of patches
        n_parcels: Number of parcels (at most ``n_patches``)
        area: Side of the square in meters
        occupancy_rate: Share of conserved patches occupied at time 0
        kernel: Colonization kernel (default constants when None)
        beta: Extinction probability of every patch
        horizon: Number of time steps
        cost_model: Parcel pricing (``ProportionalCost()`` when None)
        seed: Generator seed
        conserved_fraction: Share of conserved parcels (at least one)
        budget: Budget (a fifth of the total priced cost when None)
        min_prob: Colonization probabilities at or below this are dropped

    Returns:
        The spec

    Raises:
        GeometryError: If the area is not positive
        GeneratorError: If the counts are inconsistent
    """
    if area <= 0:
        raise GeometryError(f"Study area must be positive, got {area}")
    if n_patches < 1 or not 1 <= n_parcels <= n_patches:
        raise GeneratorError(
            f"Need 1 <= n_parcels <= n_patches, got {n_parcels} parcels for {n_patches} patches"
        )
    if not 0 <= occupancy_rate <= 1 or not 0 <= conserved_fraction <= 1:
        raise GeneratorError("occupancy_rate and conserved_fraction must be in [0, 1]")
    kernel = kernel or KernelParams()
    cost_model = cost_model or ProportionalCost()
    rng = derive_rng(seed, Stream.GENERATOR)

    positions = rng.uniform(0.0, area, size=(n_patches, 2))
    groups = _grid_parcels(positions, n_parcels, area)
    n_conserved = max(1, round(conserved_fraction * n_parcels))
    conserved = set(int(i) for i in rng.choice(n_parcels, size=n_conserved, replace=False))

    pool = sorted(p for i in conserved for p in groups[i])
    n_occupied = max(1, round(occupancy_rate * len(pool)))
    occupied = set(int(i) for i in rng.choice(pool, size=n_occupied, replace=False))

    parcels = []
    for index, patches in enumerate(groups):
        is_conserved = index in conserved
        cost = 0.0 if is_conserved else float(cost_model(len(patches), rng))
        parcels.append(Parcel(patches, is_conserved, cost, f"parcel {index}"))

    if budget is None:
        budget = round(0.2 * sum(p.cost for p in parcels), 6)
    spec = MetapopSpec(
        patches=tuple(
            Patch(float(x), float(y), i in occupied) for i, (x, y) in enumerate(positions)
        ),
        extinction=(beta,) * n_patches,
        colonization=kernel_colonization(positions, kernel, min_prob),
        horizon=horizon,
        parcels=tuple(parcels),
        kernel=kernel,
        budget=budget,
    )
    logger.debug(
        "Spatial metapopulation: %d patches, %d parcels (%d conserved), %d occupied",
        n_patches,
        n_parcels,
        n_conserved,
        n_occupied,
    )
    return spec


def distant_reservoir(
    spec: MetapopSpec,
    seed: int = 0,
    cost_model: CostModel | None = None,
) -> MetapopSpec:
    """
    Relabel conservation so that free land sits far from the population.

    Parcels holding occupied patches stay conserved; parcels farther than
    ``2 * r0`` from every occupied patch become a conserved reservoir; all
    other parcels are priced and form the corridor between them. Positions,
    probabilities and the horizon are unchanged.

    Args:
        spec: A spec with at least one occupied patch
        seed: Seed for pricing newly priced parcels
        cost_model: Pricing of parcels that had no cost

    Returns:
        The relabelled spec

    Raises:
        CorridorError: If no reservoir or no corridor can be formed
    """
    occupied = [i for i, p in enumerate(spec.patches) if p.occupied]
    if not occupied:
        raise CorridorError("The spec has no occupied patch")
    r0 = spec.kernel.r0 if spec.kernel is not None else KernelParams().r0
    distance = cdist(spec.positions, spec.positions[occupied]).min(axis=1)

    cost_model = cost_model or ProportionalCost()
    rng = derive_rng(seed, Stream.GENERATOR, 1)
    parcels = []
    reservoir = priced = 0
    for parcel in spec.parcels:
        members = list(parcel.patches)
        if any(spec.patches[i].occupied for i in members):
            parcels.append(Parcel(parcel.patches, True, 0.0, parcel.label))
        elif distance[members].min() > 2 * r0:
            parcels.append(Parcel(parcel.patches, True, 0.0, parcel.label))
            reservoir += 1
        else:
            cost = parcel.cost if parcel.cost > 0 else float(cost_model(len(members), rng))
            parcels.append(Parcel(parcel.patches, False, cost, parcel.label))
            priced += 1
    if reservoir == 0:
        raise CorridorError(f"No parcel lies farther than {2 * r0} m from the population")
    if priced == 0:
        raise CorridorError("No parcel is left to form a corridor")
    return MetapopSpec(
        patches=spec.patches,
        extinction=spec.extinction,
        colonization=spec.colonization,
        horizon=spec.horizon,
        parcels=tuple(parcels),
        kernel=spec.kernel,
        budget=spec.budget,
    )


def corridor_metapop(
    corridor_length: int = 4,
    decoys: int = 2,
    reservoir_size: int = 20,
    spacing: float = 2900.0,
    kernel: KernelParams | None = None,
    beta: float = 0.29,
    horizon: int = 20,
    budget: float | None = None,
    min_prob: float = 1e-6,
) -> MetapopSpec:
    """
    A layout where greedy buys the wrong parcels.

    An occupied source parcel sits at the origin with decoy parcels next to
    it. A line of single-patch corridor parcels, ``spacing`` apart, leads to
    a large conserved reservoir that only the last corridor patch can
    colonize. Every priced parcel costs one and the budget defaults to the
    corridor length, so buying the decoys first leaves the corridor short.

    Args:
        corridor_length: Number of corridor parcels
        decoys: Number of three-patch decoy parcels
        reservoir_size: Patches in the reservoir
        spacing: Distance between consecutive corridor patches in meters
        kernel: Colonization kernel (default constants when None)
        beta: Extinction probability of every patch
        horizon: Number of time steps
        budget: Budget (the corridor length when None)
        min_prob: Colonization probabilities at or below this are dropped

    Returns:
        The spec
    """
    if corridor_length < 0 or decoys < 0 or reservoir_size < 1:
        raise GeneratorError("corridor_length and decoys must be >= 0, reservoir_size >= 1")
    kernel = kernel or KernelParams()
    if spacing > kernel.r0:
        raise CorridorError(f"spacing {spacing} exceeds r0 {kernel.r0}; the corridor is broken")

    positions: list[tuple[float, float]] = []
    occupied: set[int] = set()
    parcels: list[Parcel] = []

    def add(points: list[tuple[float, float]]) -> tuple[int, ...]:
        start = len(positions)
        positions.extend(points)
        return tuple(range(start, len(positions)))

    ring = [(0.0, 0.0), (150.0, 0.0), (0.0, 150.0)]
    source = add(ring)
    occupied.update(source)
    parcels.append(Parcel(source, True, 0.0, "source"))

    for d in range(decoys):
        y0 = 400.0 * (d - (decoys - 1) / 2)
        patches = add([(-1500.0 + x, y0 + y) for x, y in ring])
        parcels.append(Parcel(patches, False, 1.0, f"decoy {d + 1}"))

    for c in range(1, corridor_length + 1):
        patches = add([(spacing * c, 0.0)])
        parcels.append(Parcel(patches, False, 1.0, f"corridor {c}"))

    centre = spacing * corridor_length + 0.85 * kernel.r0
    angles = np.linspace(0.0, 2 * np.pi, reservoir_size, endpoint=False)
    radii = 300.0 * np.sqrt((np.arange(reservoir_size) + 0.5) / reservoir_size)
    cloud = [
        (centre + float(r * np.cos(a)), float(r * np.sin(a)))
        for r, a in zip(radii, angles, strict=True)
    ]
    parcels.append(Parcel(add(cloud), True, 0.0, "reservoir"))

    coordinates = np.array(positions)
    return MetapopSpec(
        patches=tuple(Patch(x, y, i in occupied) for i, (x, y) in enumerate(positions)),
        extinction=(beta,) * len(positions),
        colonization=kernel_colonization(coordinates, kernel, min_prob),
        horizon=horizon,
        parcels=tuple(parcels),
        kernel=kernel,
        budget=float(corridor_length) if budget is None else budget,
    )


def random_network(
    n_nodes: int,
    n_actions: int,
    seed: int = 0,
    edge_prob: float = 0.15,
    prob_range: tuple[float, float] = (0.2, 1.0),
    free_fraction: float = 0.2,
    n_sources: int = 1,
    acyclic: bool = True,
    overlap: float = 0.0,
    reward_fraction: float = 0.5,
    max_cost: int = 3,
    budget: float | None = None,
) -> Instance:
    """
    A small random instance for property tests.

    Nodes ``0 .. n_sources - 1`` are sources. Every other node is free with
    probability ``free_fraction`` and otherwise belongs to a random action,
    and to a second one with probability ``overlap``. Edges go from lower
    to higher ids when ``acyclic``. Rewards and costs are small integers.

    Args:
        n_nodes: Number of nodes
        n_actions: Number of actions
        seed: Generator seed
        edge_prob: Probability of each candidate edge
        prob_range: Range of edge probabilities
        free_fraction: Share of free nodes
        n_sources: Number of sources
        acyclic: Only emit forward edges
        overlap: Probability of a node joining a second action
        reward_fraction: Share of nodes with positive reward
        max_cost: Largest action cost
        budget: Budget (half the total cost when None)

    Returns:
        A valid instance
    """
    if n_nodes < 1 or not 1 <= n_sources <= n_nodes:
        raise GeneratorError("Need n_nodes >= 1 and 1 <= n_sources <= n_nodes")
    rng = derive_rng(seed, Stream.GENERATOR)

    free = rng.random(n_nodes) < free_fraction
    if n_actions == 0:
        free[:] = True
    members: list[set[int]] = [set() for _ in range(n_actions)]
    for node in range(n_nodes):
        if free[node]:
            continue
        first = int(rng.integers(n_actions))
        members[first].add(node)
        if n_actions > 1 and rng.random() < overlap:
            members[int(rng.integers(n_actions))].add(node)

    mask = rng.random((n_nodes, n_nodes)) < edge_prob
    mask = np.triu(mask, k=1) if acyclic else mask & ~np.eye(n_nodes, dtype=bool)
    low, high = prob_range
    srcs, dsts = np.nonzero(mask)
    probs = rng.uniform(low, high, size=len(srcs))
    edges = tuple(
        Edge(int(u), int(v), float(p)) for u, v, p in zip(srcs, dsts, probs, strict=True)
    )

    rewards = np.where(
        rng.random(n_nodes) < reward_fraction, rng.integers(1, 4, size=n_nodes), 0
    ).astype(float)
    costs = rng.integers(1, max_cost + 1, size=n_actions).astype(float)
    actions = tuple(
        Action(frozenset(nodes), float(cost)) for nodes, cost in zip(members, costs, strict=True)
    )
    return Instance(
        num_nodes=n_nodes,
        edges=edges,
        base_nodes=frozenset(int(v) for v in np.flatnonzero(free)),
        actions=actions,
        sources=frozenset(range(n_sources)),
        rewards=tuple(float(r) for r in rewards),
        budget=float(costs.sum()) / 2 if budget is None else float(budget),
    )
