"""
Core data model for Cascada.

This module contains the problem instance (a directed graph with edge
probabilities, free base nodes and purchasable actions), purchase strategies,
reachability under a strategy, and the gadgets that turn edge or source
purchases into node purchases.
"""

import logging
from collections import defaultdict, deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel

from cascada.exceptions import (
    DuplicateCandidateError,
    EdgeNotFoundError,
    GraphError,
    InstanceValidationError,
    StrategyError,
)

logger = logging.getLogger(__name__)


class Edge(NamedTuple):
    """A probabilistic directed edge."""

    src: int
    dst: int
    prob: float


@dataclass(frozen=True)
class Action:
    """A purchasable node set."""

    nodes: frozenset[int]
    cost: float
    label: str | None = None


@dataclass(frozen=True)
class Instance:
    """
    The augmentable network.

    Nodes are the dense range ``0..num_nodes-1``; actions are numbered
    ``1..L`` and stored at ``actions[l - 1]``. Instances are immutable and
    safe to share between workers.
    """

    num_nodes: int
    edges: tuple[Edge, ...] = ()
    base_nodes: frozenset[int] = frozenset()
    actions: tuple[Action, ...] = ()
    sources: frozenset[int] = frozenset()
    rewards: tuple[float, ...] = ()
    budget: float = 0.0
    labels: tuple[str | None, ...] | None = field(default=None, compare=False)

    @classmethod
    def build(
        cls,
        num_nodes: int,
        edges: Iterable[tuple[int, int, float]] = (),
        base_nodes: Iterable[int] = (),
        actions: Iterable[Action | tuple[Iterable[int], float]] = (),
        sources: Iterable[int] = (),
        rewards: Mapping[int, float] | Sequence[float] | None = None,
        budget: float = 0.0,
        labels: Sequence[str | None] | None = None,
    ) -> "Instance":
        """
        Build an instance from loosely typed parts.

        Args:
            num_nodes: Number of nodes
            edges: ``(src, dst, prob)`` triples
            base_nodes: Free nodes (V0)
            actions: ``Action`` objects or ``(nodes, cost)`` pairs
            sources: Initially active nodes
            rewards: Reward per node, as a mapping or a dense sequence
            budget: Purchase budget
            labels: Optional node labels

        Returns:
            The instance (not validated; call ``validate``)
        """
        if rewards is None:
            dense = [0.0] * num_nodes
        elif isinstance(rewards, Mapping):
            dense = [0.0] * num_nodes
            for node, value in rewards.items():
                if 0 <= node < num_nodes:
                    dense[node] = float(value)
        else:
            dense = [float(r) for r in rewards]

        built_actions = []
        for action in actions:
            if isinstance(action, Action):
                built_actions.append(action)
            else:
                nodes, cost = action
                built_actions.append(Action(frozenset(nodes), float(cost)))

        return cls(
            num_nodes=num_nodes,
            edges=tuple(Edge(int(u), int(v), float(p)) for u, v, p in edges),
            base_nodes=frozenset(base_nodes),
            actions=tuple(built_actions),
            sources=frozenset(sources),
            rewards=tuple(dense),
            budget=float(budget),
            labels=tuple(labels) if labels is not None else None,
        )

    @property
    def n_actions(self) -> int:
        """Number of actions L."""
        return len(self.actions)

    @property
    def costs(self) -> tuple[float, ...]:
        """Action costs, ``costs[l - 1]`` for action ``l``."""
        return tuple(action.cost for action in self.actions)

    @property
    def total_cost(self) -> float:
        """Cost of purchasing every action."""
        return sum(self.costs)

    def action(self, action_id: int) -> Action:
        """Get an action by its 1-based id."""
        if not 1 <= action_id <= self.n_actions:
            raise StrategyError(f"Action {action_id} out of range 1..{self.n_actions}")
        return self.actions[action_id - 1]

    def reward(self, node: int) -> float:
        """Reward of a node."""
        return self.rewards[node] if node < len(self.rewards) else 0.0

    def with_budget(self, budget: float) -> "Instance":
        """Copy of the instance with another budget."""
        return replace(self, budget=float(budget))

    @cached_property
    def node_actions(self) -> tuple[frozenset[int], ...]:
        """
        Action set A(v) per node; the empty set marks a free (base) node.

        A base node needs no purchase even if some action also lists it.
        """
        sets: list[set[int]] = [set() for _ in range(self.num_nodes)]
        for index, action in enumerate(self.actions, start=1):
            for node in action.nodes:
                if 0 <= node < self.num_nodes:
                    sets[node].add(index)
        return tuple(
            frozenset() if node in self.base_nodes else frozenset(sets[node])
            for node in range(self.num_nodes)
        )

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edges as ``(src, dst, prob)`` numpy arrays in edge order."""
        if not self.edges:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy(), np.zeros(0, dtype=float)
        src, dst, prob = zip(*self.edges, strict=True)
        return (
            np.asarray(src, dtype=np.int64),
            np.asarray(dst, dtype=np.int64),
            np.asarray(prob, dtype=float),
        )

    @cached_property
    def out_index(self) -> tuple[np.ndarray, np.ndarray]:
        """
        CSR view of out-edges.

        Returns ``(order, ptr)``: the edge indices of node ``v`` are
        ``order[ptr[v]:ptr[v + 1]]``.
        """
        src = self.edge_arrays[0]
        order = np.argsort(src, kind="stable")
        counts = np.bincount(src, minlength=self.num_nodes)
        ptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return order, ptr

    def check(self) -> None:
        """
        Raise if the instance violates its invariants.

        Raises:
            InstanceValidationError: With the full list of violations
        """
        report = validate(self)
        if not report.ok:
            raise InstanceValidationError(report.violations)


class ValidationReport(BaseModel):
    """Outcome of ``validate``."""

    ok: bool
    violations: list[str]
    warnings: list[str]


def validate(instance: Instance) -> ValidationReport:
    """
    Check an instance against the data-model invariants.

    Args:
        instance: The instance to check

    Returns:
        A report; ``ok`` is false when any violation was found
    """
    violations: list[str] = []
    warnings: list[str] = []
    n = instance.num_nodes

    def in_range(node: int) -> bool:
        return 0 <= node < n

    seen: set[tuple[int, int]] = set()
    for index, (src, dst, prob) in enumerate(instance.edges):
        if not (in_range(src) and in_range(dst)):
            violations.append(f"edge {index} ({src}, {dst}) references an unknown node")
        if not 0.0 <= prob <= 1.0:
            violations.append(
                f"edge {index} ({src}, {dst}): probability out of range: {prob}"
            )
        if (src, dst) in seen:
            violations.append(f"duplicate edge ({src}, {dst})")
        seen.add((src, dst))

    for node in sorted(instance.base_nodes):
        if not in_range(node):
            violations.append(f"base node {node} out of range")
    for node in sorted(instance.sources):
        if not in_range(node):
            violations.append(f"source {node} out of range")

    if len(instance.rewards) != n:
        violations.append(f"expected {n} rewards, got {len(instance.rewards)}")
    for node, reward in enumerate(instance.rewards):
        if reward < 0:
            violations.append(f"node {node} has negative reward {reward}")

    covered = set(instance.base_nodes)
    for index, action in enumerate(instance.actions, start=1):
        if action.cost < 0:
            violations.append(f"action {index} has negative cost {action.cost}")
        bad = sorted(v for v in action.nodes if not in_range(v))
        if bad:
            violations.append(f"action {index} references unknown nodes {bad}")
        overlap = action.nodes & instance.base_nodes
        if overlap:
            warnings.append(
                f"action {index} is redundant on base nodes {sorted(overlap)}"
            )
        covered |= action.nodes

    for node in range(n):
        if node not in covered:
            violations.append(f"node {node} is never purchasable")

    if instance.budget < 0:
        violations.append(f"negative budget {instance.budget}")
    if instance.labels is not None and len(instance.labels) != n:
        violations.append(f"expected {n} labels, got {len(instance.labels)}")
    if not any(r > 0 for r in instance.rewards):
        warnings.append("no targets")

    return ValidationReport(ok=not violations, violations=violations, warnings=warnings)


@dataclass(frozen=True)
class Strategy:
    """
    A 0-1 purchase vector.

    ``purchased[l - 1]`` tells whether action ``l`` is bought; ``cost`` is the
    summed cost of the bought actions.
    """

    purchased: tuple[bool, ...]
    cost: float = 0.0

    @classmethod
    def empty(cls, n_actions: int) -> "Strategy":
        """The strategy that buys nothing."""
        return cls(purchased=(False,) * n_actions, cost=0.0)

    @classmethod
    def from_actions(cls, costs: Sequence[float], actions: Iterable[int]) -> "Strategy":
        """
        Build a strategy from 1-based action ids.

        Args:
            costs: Cost of every action
            actions: The actions to buy

        Returns:
            The strategy

        Raises:
            StrategyError: If an id is outside ``1..len(costs)``
        """
        bits = [False] * len(costs)
        for action in actions:
            if not 1 <= action <= len(costs):
                raise StrategyError(f"Action {action} out of range 1..{len(costs)}")
            bits[action - 1] = True
        cost = sum(c for c, bit in zip(costs, bits, strict=True) if bit)
        return cls(purchased=tuple(bits), cost=float(cost))

    @classmethod
    def for_instance(cls, instance: Instance, actions: Iterable[int] = ()) -> "Strategy":
        """Build a strategy over an instance's actions."""
        return cls.from_actions(instance.costs, actions)

    @property
    def n_actions(self) -> int:
        """Length of the bit vector."""
        return len(self.purchased)

    @property
    def actions(self) -> frozenset[int]:
        """The bought action ids."""
        return frozenset(i for i, bit in enumerate(self.purchased, start=1) if bit)

    def add(self, action: int, cost: float) -> "Strategy":
        """Copy of the strategy with one more action bought."""
        if not 1 <= action <= self.n_actions:
            raise StrategyError(f"Action {action} out of range 1..{self.n_actions}")
        if self.purchased[action - 1]:
            return self
        bits = list(self.purchased)
        bits[action - 1] = True
        return Strategy(purchased=tuple(bits), cost=self.cost + cost)

    def is_feasible(self, budget: float, tolerance: float = 1e-9) -> bool:
        """Whether the strategy fits in the budget."""
        return self.cost <= budget + tolerance


def purchased_nodes(instance: Instance, y: Strategy) -> frozenset[int]:
    """
    Nodes available under a strategy: V0 plus every bought action's nodes.

    Args:
        instance: The instance
        y: The strategy

    Returns:
        The purchased node set V(y)

    Raises:
        StrategyError: If ``y`` does not index the instance's actions
    """
    if y.n_actions != instance.n_actions:
        raise StrategyError(
            f"Strategy has {y.n_actions} actions, instance has {instance.n_actions}"
        )
    nodes = set(instance.base_nodes)
    for action_id in y.actions:
        nodes |= instance.actions[action_id - 1].nodes
    return frozenset(nodes)


def reachable(
    graph: Iterable[tuple[int, int] | tuple[int, int, float]],
    purchased: Iterable[int],
    sources: Iterable[int],
) -> frozenset[int]:
    """
    Nodes reachable from the sources through purchased nodes only.

    A source counts as reached only when it is purchased itself.

    Args:
        graph: Directed edges as ``(src, dst)`` pairs or ``(src, dst, prob)`` triples
        purchased: The purchased node set
        sources: The source set

    Returns:
        The reached node set
    """
    allowed = set(purchased)
    adjacency: dict[int, list[int]] = defaultdict(list)
    for edge in graph:
        adjacency[edge[0]].append(edge[1])

    reached = {s for s in sources if s in allowed}
    queue = deque(reached)
    while queue:
        node = queue.popleft()
        for succ in adjacency.get(node, ()):
            if succ in allowed and succ not in reached:
                reached.add(succ)
                queue.append(succ)
    return frozenset(reached)


def reachable_under(instance: Instance, y: Strategy, live_only: bool = False) -> frozenset[int]:
    """
    Reachability on an instance's own graph under a strategy.

    Args:
        instance: The instance
        y: The strategy
        live_only: Use only probability-1 edges (the deterministic core)

    Returns:
        The reached node set
    """
    edges = (e for e in instance.edges if not live_only or e.prob >= 1.0)
    return reachable(edges, purchased_nodes(instance, y), instance.sources)


def _extend_labels(instance: Instance, new_labels: Sequence[str]) -> tuple[str | None, ...] | None:
    if instance.labels is None:
        return None
    return (*instance.labels, *new_labels)


def edge_purchase_gadget(
    instance: Instance,
    purchasable_edges: Sequence[tuple[int, int]],
    costs: Sequence[float],
) -> Instance:
    """
    Make edges purchasable by routing them through a fresh purchasable node.

    Each listed edge ``(v, w)`` with probability ``p`` becomes ``(v, e, p)``
    and ``(e, w, 1.0)``, where ``e`` is a new node owned by a new single-node
    action with the given cost.

    Args:
        instance: The instance to transform
        purchasable_edges: ``(src, dst)`` pairs to make purchasable
        costs: Cost of each new action

    Returns:
        The transformed instance

    Raises:
        EdgeNotFoundError: If a listed edge is missing
    """
    if len(purchasable_edges) != len(costs):
        raise ValueError("purchasable_edges and costs must have the same length")
    if not purchasable_edges:
        return instance

    index = {(e.src, e.dst): i for i, e in enumerate(instance.edges)}
    replaced: dict[int, int] = {}
    for offset, (src, dst) in enumerate(purchasable_edges):
        position = index.get((src, dst))
        if position is None or position in replaced:
            raise EdgeNotFoundError(src, dst)
        replaced[position] = instance.num_nodes + offset

    edges: list[Edge] = []
    for position, edge in enumerate(instance.edges):
        gate = replaced.get(position)
        if gate is None:
            edges.append(edge)
        else:
            edges.append(Edge(edge.src, gate, edge.prob))
            edges.append(Edge(gate, edge.dst, 1.0))

    new_actions = tuple(
        Action(frozenset({instance.num_nodes + offset}), float(cost), f"edge {src}->{dst}")
        for offset, ((src, dst), cost) in enumerate(zip(purchasable_edges, costs, strict=True))
    )
    added = len(purchasable_edges)
    logger.debug("Edge gadget added %d purchasable edges", added)
    return replace(
        instance,
        num_nodes=instance.num_nodes + added,
        edges=tuple(edges),
        actions=instance.actions + new_actions,
        rewards=instance.rewards + (0.0,) * added,
        labels=_extend_labels(instance, [f"edge({s},{d})" for s, d in purchasable_edges]),
    )


def source_purchase_gadget(
    instance: Instance,
    candidate_sources: Sequence[int],
    costs: Sequence[float],
) -> Instance:
    """
    Make sources purchasable.

    Each candidate ``i`` gains a fresh source node ``s_i``, owned by a new
    action with the given cost, and an edge ``(s_i, i, 1.0)``. The candidate
    itself is not made a source.

    Args:
        instance: The instance to transform
        candidate_sources: Nodes that may be seeded
        costs: Cost of seeding each candidate

    Returns:
        The transformed instance

    Raises:
        DuplicateCandidateError: If a candidate is listed twice
    """
    if len(candidate_sources) != len(costs):
        raise ValueError("candidate_sources and costs must have the same length")
    seen: set[int] = set()
    for node in candidate_sources:
        if node in seen:
            raise DuplicateCandidateError(node)
        if not 0 <= node < instance.num_nodes:
            raise GraphError(f"Source candidate {node} is not a node of the instance")
        seen.add(node)
    if not candidate_sources:
        return instance

    start = instance.num_nodes
    added = len(candidate_sources)
    new_nodes = range(start, start + added)
    new_edges = tuple(
        Edge(gate, node, 1.0) for gate, node in zip(new_nodes, candidate_sources, strict=True)
    )
    new_actions = tuple(
        Action(frozenset({gate}), float(cost), f"seed {node}")
        for gate, node, cost in zip(new_nodes, candidate_sources, costs, strict=True)
    )
    return replace(
        instance,
        num_nodes=start + added,
        edges=instance.edges + new_edges,
        actions=instance.actions + new_actions,
        sources=instance.sources | frozenset(new_nodes),
        rewards=instance.rewards + (0.0,) * added,
        labels=_extend_labels(instance, [f"seed({node})" for node in candidate_sources]),
    )
