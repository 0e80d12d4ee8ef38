"""
Objective-preserving compression of cascade samples.

Three reductions are applied in rotation until nothing changes:

- pruning drops nodes that no source reaches and nodes that lead to no reward;
- source collapsing merges the free sources, and the free nodes they reach
  through free nodes only, into a single always-reached source;
- the implication quotient merges nodes that are reached together under
  every strategy.

Each reduction keeps the reached reward identical for every strategy.
Reduced node ids are the smallest original id they stand for, so reducing a
reduced cascade returns it unchanged.
"""

import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field, replace
from itertools import chain

import numpy as np
from pydantic import BaseModel, Field
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from cascada._internal.workers import ordered_map
from cascada.cascade import CascadeSample

logger = logging.getLogger(__name__)


class StageSize(BaseModel):
    """Cascade size after one reduction stage."""

    rotation: int
    stage: str
    nodes: int
    edges: int


class ReductionStats(BaseModel):
    """Compression statistics of one cascade."""

    scenario_index: int
    nodes_sampled: int
    edges_sampled: int
    nodes_final: int = 0
    edges_final: int = 0
    rotations: int = 0
    unmerged_components: int = 0
    stages: list[StageSize] = Field(default_factory=list)


class StatsSummary(BaseModel):
    """Averages of ``ReductionStats`` over a pool."""

    cascades: int
    mean_nodes_sampled: float
    mean_edges_sampled: float
    mean_nodes_final: float
    mean_edges_final: float
    mean_rotations: float
    node_ratio: float
    edge_ratio: float


@dataclass(frozen=True)
class ReducedCascade(CascadeSample):
    """A compressed scenario; ``provenance`` lists the original nodes per node."""

    provenance: tuple[frozenset[int], ...] = ()
    stats: ReductionStats | None = field(default=None, compare=False)


def as_reduced(cascade: CascadeSample) -> ReducedCascade:
    """Wrap a sample as a reduced cascade where each node stands for itself."""
    if isinstance(cascade, ReducedCascade):
        if len(cascade.provenance) == cascade.n_nodes:
            return cascade
        return replace(cascade, provenance=tuple(frozenset({v}) for v in cascade.nodes))
    return ReducedCascade(
        scenario_index=cascade.scenario_index,
        nodes=cascade.nodes,
        edges=cascade.edges,
        sources=cascade.sources,
        rewards=cascade.rewards,
        action_sets=cascade.action_sets,
        seed=cascade.seed,
        provenance=tuple(frozenset({v}) for v in cascade.nodes),
    )


def _objects(items: Sequence[frozenset[int]]) -> np.ndarray:
    array = np.empty(len(items), dtype=object)
    array[:] = list(items)
    return array


@dataclass
class _Arrays:
    """
    Working form of a cascade during reduction.

    Nodes are addressed by position and sorted by id; ``src`` and ``dst``
    hold the edge ends, ``sources`` and ``free`` flag positions.
    """

    ids: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    sources: np.ndarray
    free: np.ndarray
    rewards: np.ndarray
    action_sets: np.ndarray
    provenance: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return len(self.src)

    def signature(self) -> tuple[int, int, int]:
        return self.n, self.m, int(self.sources.sum())

    @classmethod
    def of(cls, cascade: ReducedCascade) -> "_Arrays":
        ids = np.fromiter(cascade.nodes, dtype=np.int64, count=cascade.n_nodes)
        order = np.argsort(ids, kind="stable")
        ids = ids[order]
        ends = np.fromiter(
            chain.from_iterable(cascade.edges), dtype=np.int64, count=2 * cascade.n_edges
        ).reshape(-1, 2)
        ends = np.searchsorted(ids, ends)
        action_sets = _objects(cascade.action_sets)[order]
        return cls(
            ids=ids,
            src=ends[:, 0].copy(),
            dst=ends[:, 1].copy(),
            sources=np.isin(ids, np.fromiter(cascade.sources, dtype=np.int64)),
            free=np.fromiter((not a for a in action_sets), dtype=bool, count=len(ids)),
            rewards=np.asarray(cascade.rewards, dtype=float)[order],
            action_sets=action_sets,
            provenance=_objects(cascade.provenance)[order],
        )

    def to_cascade(self, template: ReducedCascade) -> ReducedCascade:
        tails, heads = self.ids[self.src], self.ids[self.dst]
        by_edge = np.lexsort((heads, tails))
        return ReducedCascade(
            scenario_index=template.scenario_index,
            nodes=tuple(self.ids.tolist()),
            edges=tuple(zip(tails[by_edge].tolist(), heads[by_edge].tolist(), strict=True)),
            sources=frozenset(self.ids[self.sources].tolist()),
            rewards=tuple(self.rewards.tolist()),
            action_sets=tuple(self.action_sets.tolist()),
            seed=template.seed,
            provenance=tuple(self.provenance.tolist()),
            stats=template.stats,
        )


def _reach(n: int, tails: np.ndarray, heads: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Positions reachable from ``start`` along ``tails -> heads``."""
    seen = np.zeros(n, dtype=bool)
    starts = np.flatnonzero(start)
    if starts.size == 0:
        return seen
    # one extra node pointing at every start
    rows = np.concatenate([tails, np.full(starts.size, n, dtype=np.int64)])
    cols = np.concatenate([heads, starts])
    graph = csr_matrix((np.ones(rows.size, dtype=np.int32), (rows, cols)), shape=(n + 1, n + 1))
    order = breadth_first_order(graph, n, directed=True, return_predecessors=False)
    seen[order[order < n]] = True
    return seen


def _keep(work: _Arrays, mask: np.ndarray) -> _Arrays:
    kept = np.flatnonzero(mask)
    slot = np.full(work.n, -1, dtype=np.int64)
    slot[kept] = np.arange(kept.size)
    live = mask[work.src] & mask[work.dst]
    return _Arrays(
        ids=work.ids[kept],
        src=slot[work.src[live]],
        dst=slot[work.dst[live]],
        sources=work.sources[kept],
        free=work.free[kept],
        rewards=work.rewards[kept],
        action_sets=work.action_sets[kept],
        provenance=work.provenance[kept],
    )


def _merge(work: _Arrays, labels: np.ndarray, group_actions: dict[int, frozenset[int]]) -> _Arrays:
    """
    Merge the nodes sharing a label.

    ``labels`` must use every value in ``0..g-1`` and every label with more
    than one member needs an entry in ``group_actions``. A merged node takes
    the smallest member id; a single member keeps its own attributes.
    Self-loops and duplicate edges are dropped.
    """
    _, first, sizes = np.unique(labels, return_index=True, return_counts=True)
    groups = first.size
    # positions are in id order, so a group's first position holds its smallest id
    order = np.argsort(first, kind="stable")
    slot = np.empty(groups, dtype=np.int64)
    slot[order] = np.arange(groups)
    new_pos = slot[labels]
    head = first[order]

    action_sets = work.action_sets[head]
    provenance = work.provenance[head]
    free = work.free[head]
    merged: dict[int, list[int]] = {}
    for i in np.flatnonzero(sizes[labels] > 1).tolist():
        merged.setdefault(int(new_pos[i]), []).append(i)
    for s, members in merged.items():
        action = group_actions[int(order[s])]
        action_sets[s] = action
        free[s] = not action
        provenance[s] = frozenset().union(*work.provenance[members])

    sources = np.zeros(groups, dtype=bool)
    sources[new_pos[work.sources]] = True
    tails, heads = new_pos[work.src], new_pos[work.dst]
    distinct = tails != heads
    keys = np.unique(tails[distinct] * groups + heads[distinct])
    return _Arrays(
        ids=work.ids[head],
        src=keys // groups,
        dst=keys % groups,
        sources=sources,
        free=free,
        rewards=np.bincount(new_pos, weights=work.rewards, minlength=groups),
        action_sets=action_sets,
        provenance=provenance,
    )


def _prune(work: _Arrays) -> _Arrays:
    forward = _reach(work.n, work.src, work.dst, work.sources)
    backward = _reach(work.n, work.dst, work.src, work.rewards > 0)
    keep = forward & backward
    if keep.all():
        return work
    return _keep(work, keep)


def _collapse(work: _Arrays) -> _Arrays:
    start = work.sources & work.free
    if not start.any():
        return work
    into_free = work.free[work.dst]
    absorbed = _reach(work.n, work.src[into_free], work.dst[into_free], start)
    inbound = absorbed[work.dst]
    if absorbed.sum() == 1 and not inbound.any():
        return work
    labels = np.where(absorbed, 0, np.cumsum(~absorbed))
    trimmed = replace(work, src=work.src[~inbound], dst=work.dst[~inbound])
    return _merge(trimmed, labels, {0: frozenset()})


def _implications(work: _Arrays) -> tuple[np.ndarray, np.ndarray]:
    """Implication pairs as position arrays; see ``implies_edges``."""
    index: dict[frozenset[int], int] = {}
    set_ids = np.fromiter(
        (index.setdefault(a, len(index)) for a in work.action_sets), dtype=np.int64, count=work.n
    )
    distinct = list(index)
    width = max(len(distinct), 1)
    tails = heads = np.empty(0, dtype=np.int64)
    if work.m:
        pairs, inverse = np.unique(
            set_ids[work.src] * width + set_ids[work.dst], return_inverse=True
        )
        verdicts = []
        for pair in pairs.tolist():
            a_u, a_v = distinct[pair // width], distinct[pair % width]
            verdicts.append(not a_v or bool(a_u and a_u <= a_v))
        by_edge = np.asarray(verdicts, dtype=bool)[inverse.reshape(-1)]
        tails, heads = work.src[by_edge], work.dst[by_edge]

    in_degree = np.bincount(work.dst, minlength=work.n)
    lone = np.flatnonzero((in_degree == 1) & ~work.sources)
    predecessor = np.full(work.n, -1, dtype=np.int64)
    predecessor[work.dst] = work.src
    return np.concatenate([tails, lone]), np.concatenate([heads, predecessor[lone]])


def _is_chain(sets: list[frozenset[int]]) -> bool:
    ordered = sorted(sets, key=len)
    return all(a <= b for a, b in zip(ordered, ordered[1:], strict=False))


def _quotient(work: _Arrays) -> tuple[_Arrays, int]:
    """The quotient and the number of components left unmerged."""
    if work.n == 0:
        return work, 0
    tails, heads = _implications(work)
    graph = csr_matrix(
        (np.ones(tails.size, dtype=np.int32), (tails, heads)), shape=(work.n, work.n)
    )
    count, labels = connected_components(graph, directed=True, connection="strong")
    if count == work.n:
        return work, 0

    labels = labels.astype(np.int64)
    sizes = np.bincount(labels, minlength=count)
    components: dict[int, list[int]] = {}
    for i in np.flatnonzero(sizes[labels] > 1).tolist():
        components.setdefault(int(labels[i]), []).append(i)

    group_actions: dict[int, frozenset[int]] = {}
    unmerged = 0
    fresh = count
    for label, members in components.items():
        priced = [work.action_sets[i] for i in members if work.action_sets[i]]
        if _is_chain(priced):
            group_actions[label] = min(priced, key=len) if priced else frozenset()
            continue
        unmerged += 1
        for i in members[1:]:
            labels[i] = fresh
            fresh += 1
    if not group_actions:
        return work, unmerged
    return _merge(work, labels, group_actions), unmerged


def prune(cascade: CascadeSample) -> ReducedCascade:
    """
    Drop nodes that cannot contribute reward.

    A node is kept when some source reaches it with every action purchased
    and it has positive reward or reaches a positive-reward node.

    Args:
        cascade: A sample or reduced cascade

    Returns:
        The pruned cascade
    """
    cascade = as_reduced(cascade)
    work = _Arrays.of(cascade)
    pruned = _prune(work)
    return cascade if pruned is work else pruned.to_cascade(cascade)


def collapse_sources(cascade: CascadeSample) -> ReducedCascade:
    """
    Merge the free sources and the free nodes they reach into one source.

    Priced sources are left alone: they are reached only when bought. The
    merged source keeps the smallest member id, the summed reward and the
    out-edges of its members; edges into it are dropped.

    Args:
        cascade: A sample or reduced cascade

    Returns:
        The collapsed cascade
    """
    cascade = as_reduced(cascade)
    work = _Arrays.of(cascade)
    collapsed = _collapse(work)
    return cascade if collapsed is work else collapsed.to_cascade(cascade)


def implies_edges(cascade: CascadeSample) -> set[tuple[int, int]]:
    """
    Pairs ``(u, v)`` such that reaching ``u`` guarantees reaching ``v``.

    Two rules produce them:

    - for an edge ``(u, v)``: when ``v`` is free, or ``u`` is priced and
      ``A(u)`` is a subset of ``A(v)``; a free ``u`` never implies a priced ``v``;
    - for a non-source ``u`` whose only in-edge is ``(v, u)``: ``u`` implies ``v``.

    Args:
        cascade: A sample or reduced cascade

    Returns:
        Implication pairs over node ids
    """
    work = _Arrays.of(as_reduced(cascade))
    tails, heads = _implications(work)
    return set(zip(work.ids[tails].tolist(), work.ids[heads].tolist(), strict=True))


def scc_quotient(cascade: CascadeSample) -> ReducedCascade:
    """
    Merge every group of mutually implying nodes into one node.

    The merged node sums the rewards, is a source if any member is, and is
    purchasable by the smallest member action set. Groups whose priced
    members' action sets are not nested are left as they are.

    Args:
        cascade: A sample or reduced cascade

    Returns:
        The quotient cascade; ``unmerged_components`` of its statistics counts
        the groups that were left alone
    """
    cascade = as_reduced(cascade)
    work = _Arrays.of(cascade)
    merged, unmerged = _quotient(work)
    if unmerged and cascade.stats is not None:
        cascade = replace(
            cascade,
            stats=cascade.stats.model_copy(
                update={"unmerged_components": max(cascade.stats.unmerged_components, unmerged)}
            ),
        )
    return cascade if merged is work else merged.to_cascade(cascade)


def reduce(cascade: CascadeSample) -> ReducedCascade:
    """
    Apply prune, collapse_sources and scc_quotient in rotation to a fixpoint.

    The stages work on array copies of the cascade, which is rebuilt once at
    the end.

    Args:
        cascade: A sample or reduced cascade

    Returns:
        The reduced cascade, carrying its ``ReductionStats``
    """
    current = as_reduced(cascade)
    stats = ReductionStats(
        scenario_index=current.scenario_index,
        nodes_sampled=current.n_nodes,
        edges_sampled=current.n_edges,
    )
    original = work = _Arrays.of(current)

    def quotient(w: _Arrays) -> _Arrays:
        merged, unmerged = _quotient(w)
        stats.unmerged_components = max(stats.unmerged_components, unmerged)
        return merged

    stages: tuple[tuple[str, Callable[[_Arrays], _Arrays]], ...] = (
        ("prune", _prune),
        ("collapse", _collapse),
        ("quotient", quotient),
    )
    rotation = 0
    while True:
        rotation += 1
        before = work.signature()
        for name, step in stages:
            work = step(work)
            stats.stages.append(
                StageSize(rotation=rotation, stage=name, nodes=work.n, edges=work.m)
            )
        if work.signature() == before:
            break

    stats.nodes_final = work.n
    stats.edges_final = work.m
    stats.rotations = rotation
    current = replace(current, stats=stats)
    if work is not original:
        current = work.to_cascade(current)
    logger.debug(
        "Cascade %d reduced from %d/%d to %d/%d nodes/edges in %d rotations",
        current.scenario_index,
        stats.nodes_sampled,
        stats.edges_sampled,
        current.n_nodes,
        current.n_edges,
        rotation,
    )
    return current


def commit_action(cascade: CascadeSample, action: int) -> ReducedCascade:
    """
    Treat ``action`` as bought for good and reduce again.

    Every node whose action set contains ``action`` becomes free. A reduced
    cascade where no node carries ``action`` is returned as it is.

    Args:
        cascade: A sample or reduced cascade
        action: The committed action id

    Returns:
        The reduced cascade
    """
    cascade = as_reduced(cascade)
    if cascade.stats is not None and action not in cascade.referenced_actions:
        return cascade
    action_sets = tuple(frozenset() if action in a else a for a in cascade.action_sets)
    if action_sets != cascade.action_sets:
        cascade = replace(cascade, action_sets=action_sets)
    return reduce(cascade)


def reduce_pool(cascades: Iterable[CascadeSample], jobs: int = 1) -> list[ReducedCascade]:
    """Reduce every cascade of a pool, in order."""
    return ordered_map(reduce, cascades, jobs=jobs)


def summarize_stats(stats: Sequence[ReductionStats]) -> StatsSummary:
    """
    Average compression statistics over a pool.

    Args:
        stats: One entry per cascade

    Returns:
        The summary; ratios are final over sampled sizes (1.0 for empty pools)
    """
    count = len(stats)
    if count == 0:
        return StatsSummary(
            cascades=0,
            mean_nodes_sampled=0.0,
            mean_edges_sampled=0.0,
            mean_nodes_final=0.0,
            mean_edges_final=0.0,
            mean_rotations=0.0,
            node_ratio=1.0,
            edge_ratio=1.0,
        )
    nodes_sampled = sum(s.nodes_sampled for s in stats)
    edges_sampled = sum(s.edges_sampled for s in stats)
    nodes_final = sum(s.nodes_final for s in stats)
    edges_final = sum(s.edges_final for s in stats)
    return StatsSummary(
        cascades=count,
        mean_nodes_sampled=nodes_sampled / count,
        mean_edges_sampled=edges_sampled / count,
        mean_nodes_final=nodes_final / count,
        mean_edges_final=edges_final / count,
        mean_rotations=sum(s.rotations for s in stats) / count,
        node_ratio=nodes_final / nodes_sampled if nodes_sampled else 1.0,
        edge_ratio=edges_final / edges_sampled if edges_sampled else 1.0,
    )
