"""
Cascade sampling and evaluation.

A cascade sample is one live-edge scenario: every explored edge flips its coin
once, and the scenario keeps the live edges reachable from the sources when
every action is purchased. A strategy's value on a sample is the reward of
the nodes reachable through purchased nodes.
"""

import logging
import math
from collections import deque
from collections.abc import Collection, Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property, partial

import numpy as np

from cascada._internal.seeding import derive_rng, seed_tuple
from cascada._internal.workers import ordered_map
from cascada.core import Instance, Strategy
from cascada.types import SeedKey

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CascadeSample:
    """
    One deterministic scenario.

    Per-node arrays (``rewards``, ``action_sets``) are aligned with
    ``nodes``. An empty action set marks a free node.
    """

    scenario_index: int
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    sources: frozenset[int]
    rewards: tuple[float, ...]
    action_sets: tuple[frozenset[int], ...]
    seed: tuple[int, ...] = field(default=(), compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    @cached_property
    def position(self) -> dict[int, int]:
        """Map from node id to its index in ``nodes``."""
        return {node: i for i, node in enumerate(self.nodes)}

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        """Successor positions per node position."""
        out: list[list[int]] = [[] for _ in self.nodes]
        pos = self.position
        for src, dst in self.edges:
            out[pos[src]].append(pos[dst])
        return tuple(tuple(s) for s in out)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        """Predecessor positions per node position."""
        into: list[list[int]] = [[] for _ in self.nodes]
        pos = self.position
        for src, dst in self.edges:
            into[pos[dst]].append(pos[src])
        return tuple(tuple(p) for p in into)

    @cached_property
    def source_positions(self) -> tuple[int, ...]:
        pos = self.position
        return tuple(sorted(pos[s] for s in self.sources if s in pos))

    @cached_property
    def referenced_actions(self) -> frozenset[int]:
        """Every action some node of the sample belongs to."""
        return frozenset().union(*self.action_sets) if self.action_sets else frozenset()

    def reward_of(self, node: int) -> float:
        return self.rewards[self.position[node]]

    def action_set_of(self, node: int) -> frozenset[int]:
        return self.action_sets[self.position[node]]


def _bought(y: Strategy | Collection[int]) -> frozenset[int]:
    return y.actions if isinstance(y, Strategy) else frozenset(y)


def _reach_positions(sample: CascadeSample, bought: frozenset[int]) -> list[bool]:
    action_sets = sample.action_sets
    usable = [not a or not a.isdisjoint(bought) for a in action_sets]
    reached = [False] * sample.n_nodes
    queue: deque[int] = deque()
    for s in sample.source_positions:
        if usable[s]:
            reached[s] = True
            queue.append(s)
    successors = sample.successors
    while queue:
        node = queue.popleft()
        for succ in successors[node]:
            if usable[succ] and not reached[succ]:
                reached[succ] = True
                queue.append(succ)
    return reached


def reachable_nodes(sample: CascadeSample, y: Strategy | Collection[int]) -> frozenset[int]:
    """
    Nodes of a sample reached under a strategy.

    Args:
        sample: The scenario
        y: A strategy or a collection of bought action ids

    Returns:
        Reached node ids
    """
    reached = _reach_positions(sample, _bought(y))
    return frozenset(node for node, hit in zip(sample.nodes, reached, strict=True) if hit)


def evaluate_on_sample(sample: CascadeSample, y: Strategy | Collection[int]) -> float:
    """
    Reward reached on one scenario.

    A node is usable when its action set is empty or intersects the bought
    actions; sources count only when usable.

    Args:
        sample: The scenario
        y: A strategy or a collection of bought action ids

    Returns:
        Sum of the rewards of the reached nodes
    """
    reached = _reach_positions(sample, _bought(y))
    return float(sum(r for r, hit in zip(sample.rewards, reached, strict=True) if hit))


def marginal_reward(
    sample: CascadeSample,
    reached: Collection[int],
    bought: Collection[int],
    action: int,
) -> float:
    """
    Reward newly reached when ``action`` is added to ``bought``.

    Any newly reached node lies behind a first new node whose action set
    contains ``action`` and which is a source or has a reached predecessor,
    so the search starts from those nodes only.

    Args:
        sample: The scenario
        reached: Node ids reached under ``bought``
        bought: Currently bought actions
        action: Candidate action

    Returns:
        The reward gain, equal to
        ``evaluate_on_sample(sample, bought | {action}) - evaluate_on_sample(sample, bought)``
    """
    after = frozenset(bought) | {action}
    pos = sample.position
    hit = [False] * sample.n_nodes
    for node in reached:
        if node in pos:
            hit[pos[node]] = True

    sources = set(sample.source_positions)
    predecessors = sample.predecessors
    frontier: deque[int] = deque()
    for i, actions in enumerate(sample.action_sets):
        if hit[i] or action not in actions:
            continue
        if i in sources or any(hit[p] for p in predecessors[i]):
            hit[i] = True
            frontier.append(i)

    gain = 0.0
    successors = sample.successors
    action_sets = sample.action_sets
    while frontier:
        node = frontier.popleft()
        gain += sample.rewards[node]
        for succ in successors[node]:
            if hit[succ]:
                continue
            actions = action_sets[succ]
            if not actions or not actions.isdisjoint(after):
                hit[succ] = True
                frontier.append(succ)
    return gain


def sample_cascade(instance: Instance, k: int, rng_seed: SeedKey) -> CascadeSample:
    """
    Sample scenario ``k`` by forward simulation from the sources.

    The coin of edge ``e`` is the ``e``-th uniform drawn from the generator
    keyed by ``(rng_seed, k)``, so a scenario does not depend on which
    process samples it. Only edges leaving nodes reached with every action
    purchased are kept.

    Args:
        instance: The instance
        k: Scenario index
        rng_seed: Seed or seed tuple of the stream

    Returns:
        The scenario
    """
    key = seed_tuple(rng_seed, k)
    rng = derive_rng(key)
    src, dst, prob = instance.edge_arrays
    live = rng.random(len(src)) < prob

    order, ptr = instance.out_index
    reached = np.zeros(instance.num_nodes, dtype=bool)
    queue = deque(sorted(instance.sources))
    reached[list(instance.sources)] = True
    while queue:
        node = queue.popleft()
        for e in order[ptr[node] : ptr[node + 1]]:
            if live[e] and not reached[dst[e]]:
                reached[dst[e]] = True
                queue.append(int(dst[e]))

    kept = np.flatnonzero(live & reached[src]) if len(src) else np.zeros(0, dtype=np.int64)
    nodes = tuple(int(v) for v in np.flatnonzero(reached))
    node_actions = instance.node_actions
    return CascadeSample(
        scenario_index=k,
        nodes=nodes,
        edges=tuple((int(src[e]), int(dst[e])) for e in kept),
        sources=frozenset(instance.sources),
        rewards=tuple(instance.rewards[v] for v in nodes),
        action_sets=tuple(node_actions[v] for v in nodes),
        seed=key,
    )


def _sample_indexed(instance: Instance, rng_seed: SeedKey, k: int) -> CascadeSample:
    return sample_cascade(instance, k, rng_seed)


def sample_cascades(
    instance: Instance,
    n: int,
    rng_seed: SeedKey,
    jobs: int = 1,
    start: int = 0,
) -> list[CascadeSample]:
    """
    Sample scenarios ``start .. start + n - 1`` of a stream.

    Args:
        instance: The instance
        n: Number of scenarios
        rng_seed: Seed or seed tuple of the stream
        jobs: Worker processes
        start: First scenario index

    Returns:
        The scenarios in index order
    """
    samples = ordered_map(
        partial(_sample_indexed, instance, rng_seed), range(start, start + n), jobs=jobs
    )
    logger.debug(
        "Sampled %d cascades, mean size %.1f nodes",
        n,
        float(np.mean([s.n_nodes for s in samples])) if samples else 0.0,
    )
    return samples


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and standard error (0 for fewer than two values)."""
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        return 0.0, 0.0
    mean = float(data.mean())
    if data.size < 2:
        return mean, 0.0
    return mean, float(data.std(ddof=1) / math.sqrt(data.size))


def pool_estimate(
    pool: Iterable[CascadeSample], y: Strategy | Collection[int]
) -> tuple[float, float]:
    """
    Mean and standard error of a strategy over a sampled pool.

    Args:
        pool: Scenarios
        y: Strategy to evaluate

    Returns:
        ``(mean, stderr)``
    """
    bought = _bought(y)
    return mean_and_stderr([evaluate_on_sample(sample, bought) for sample in pool])


def estimate_objective(
    instance: Instance,
    y: Strategy,
    n: int,
    rng_seed: SeedKey,
    jobs: int = 1,
) -> tuple[float, float]:
    """
    Monte Carlo estimate of a strategy's expected reward.

    Args:
        instance: The instance
        y: Strategy to evaluate
        n: Number of fresh scenarios
        rng_seed: Seed or seed tuple of the stream
        jobs: Worker processes

    Returns:
        ``(mean, stderr)``
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    return pool_estimate(sample_cascades(instance, n, rng_seed, jobs=jobs), y)


def simulate_activation(
    instance: Instance,
    purchased: Collection[int],
    live: Sequence[bool] | np.ndarray,
    order: str = "fifo",
    rng: np.random.Generator | None = None,
) -> frozenset[int]:
    """
    Run the progressive activation process step by step.

    Active nodes queue one activation attempt per out-edge; attempts are
    processed in ``order`` (``"fifo"``, ``"lifo"`` or ``"random"``) and
    succeed when the edge is live and the target is purchased.

    Args:
        instance: The instance
        purchased: Purchased node set
        live: Coin outcome per instance edge
        order: Attempt sequencing
        rng: Generator used by the ``"random"`` order

    Returns:
        The final active set
    """
    if order not in ("fifo", "lifo", "random"):
        raise ValueError(f"Unknown activation order: {order}")
    if order == "random" and rng is None:
        raise ValueError("random order needs a generator")
    allowed = set(purchased)
    order_index, ptr = instance.out_index
    dst = instance.edge_arrays[1]

    active: set[int] = set()
    pending: list[int] = []

    def activate(node: int) -> None:
        active.add(node)
        pending.extend(int(e) for e in order_index[ptr[node] : ptr[node + 1]])

    for source in sorted(instance.sources):
        if source in allowed:
            activate(source)

    while pending:
        if order == "fifo":
            attempt = pending.pop(0)
        elif order == "lifo":
            attempt = pending.pop()
        else:
            assert rng is not None
            pick = int(rng.integers(len(pending)))
            pending[pick], pending[-1] = pending[-1], pending[pick]
            attempt = pending.pop()
        target = int(dst[attempt])
        if live[attempt] and target in allowed and target not in active:
            activate(target)
    return frozenset(active)
