"""Tests for cascade preprocessing."""

import itertools
from dataclasses import replace

import pytest

from cascada.cascade import CascadeSample, evaluate_on_sample, sample_cascade, sample_cascades
from cascada.core import Instance
from cascada.generators import figure2, random_network
from cascada.preprocess import (
    ReducedCascade,
    ReductionStats,
    as_reduced,
    collapse_sources,
    commit_action,
    implies_edges,
    prune,
    reduce,
    reduce_pool,
    scc_quotient,
    summarize_stats,
)


def make(nodes, edges, sources, rewards, action_sets) -> CascadeSample:
    """Build a cascade from plain lists."""
    return CascadeSample(
        scenario_index=0,
        nodes=tuple(nodes),
        edges=tuple(edges),
        sources=frozenset(sources),
        rewards=tuple(float(r) for r in rewards),
        action_sets=tuple(frozenset(a) for a in action_sets),
    )


def all_strategies(n_actions: int):
    """Every subset of 1..n_actions."""
    actions = range(1, n_actions + 1)
    return itertools.chain.from_iterable(
        itertools.combinations(actions, size) for size in range(n_actions + 1)
    )


def test_as_reduced_adds_provenance():
    """Test wrapping a sample gives each node its own provenance."""
    sample = make([0, 4], [(0, 4)], [0], [0, 1], [[], [1]])

    reduced = as_reduced(sample)

    assert isinstance(reduced, ReducedCascade)
    assert reduced.provenance == (frozenset({0}), frozenset({4}))
    assert as_reduced(reduced) is reduced


def test_prune_drops_dead_ends():
    """Test nodes that reach no reward are removed."""
    sample = make(
        [0, 1, 2, 3],
        [(0, 1), (0, 2), (2, 3)],
        [0],
        [0, 1, 0, 0],
        [[], [1], [2], [1]],
    )

    pruned = prune(sample)

    assert pruned.nodes == (0, 1)
    assert pruned.edges == ((0, 1),)


def test_collapse_sources_absorbs_free_region():
    """Test the free source swallows the free nodes it reaches."""
    sample = make(
        [0, 1, 2, 3],
        [(0, 1), (1, 2), (2, 3), (3, 1)],
        [0],
        [0, 2, 0, 5],
        [[], [], [1], []],
    )

    collapsed = collapse_sources(sample)

    assert collapsed.nodes == (0, 2, 3)
    assert collapsed.sources == frozenset({0})
    assert collapsed.rewards == (2.0, 0.0, 5.0)
    assert collapsed.action_sets == (frozenset(), frozenset({1}), frozenset())
    # the edge back into the absorbed region is gone
    assert collapsed.edges == ((0, 2), (2, 3))
    assert collapsed.provenance[0] == frozenset({0, 1})


def test_collapse_sources_keeps_priced_sources():
    """Test a priced source is left alone."""
    sample = make([0, 1], [(0, 1)], [0], [1, 1], [[1], []])

    assert collapse_sources(sample).nodes == (0, 1)


def test_implies_edges_rules():
    """Test both implication rules."""
    sample = make(
        [0, 1, 2, 3, 4],
        [(0, 1), (1, 2), (2, 3), (0, 3), (3, 4), (1, 4)],
        [0],
        [0, 1, 1, 1, 1],
        [[], [1], [1, 2], [2], []],
    )

    implied = implies_edges(sample)

    # subset rule
    assert (1, 2) in implied
    # free target
    assert (3, 4) in implied
    assert (1, 4) in implied
    # free source does not imply a priced node
    assert (0, 1) not in implied
    # A(2) is not a subset of A(3)
    assert (2, 3) not in implied
    # single in-edge rule
    assert (1, 0) in implied
    assert (2, 1) in implied
    assert (0, 3) not in implied


def test_scc_quotient_merges_chain():
    """Test a mutually implying pair with nested action sets is merged."""
    sample = make(
        [0, 1, 2],
        [(0, 1), (1, 2), (2, 1)],
        [0],
        [0, 1, 2],
        [[], [1], [1, 2]],
    )

    merged = scc_quotient(sample)

    assert merged.nodes == (0, 1)
    assert merged.rewards == (0.0, 3.0)
    assert merged.action_sets == (frozenset(), frozenset({1}))
    assert merged.provenance[1] == frozenset({1, 2})


def test_scc_quotient_leaves_incomparable_sets():
    """Test a component whose action sets are not nested stays unmerged."""
    sample = make(
        [0, 1, 2],
        [(1, 2), (2, 1)],
        [0],
        [1, 1, 1],
        [[], [1], [2]],
    )
    stats = ReductionStats(scenario_index=0, nodes_sampled=3, edges_sampled=2)
    sample = replace(as_reduced(sample), stats=stats)

    result = scc_quotient(sample)

    assert result.nodes == (0, 1, 2)
    assert result.stats is not None
    assert result.stats.unmerged_components == 1


def test_reduce_merges_free_chain_into_source():
    """Test a free path below the source collapses and the rotation settles."""
    instance = Instance.build(
        num_nodes=4,
        edges=[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
        base_nodes=[0, 1, 2],
        actions=[([3], 1.0)],
        sources=[0],
        rewards={2: 1.0, 3: 1.0},
    )
    sample = sample_cascade(instance, 0, 0)

    reduced = reduce(sample)

    assert reduced.nodes == (0, 3)
    assert reduced.edges == ((0, 3),)
    assert reduced.rewards == (1.0, 1.0)
    assert reduced.provenance == (frozenset({0, 1, 2}), frozenset({3}))
    assert reduced.stats is not None
    assert reduced.stats.nodes_sampled == 4
    assert reduced.stats.nodes_final == 2
    assert reduced.stats.rotations == 2
    assert [s.stage for s in reduced.stats.stages[:3]] == ["prune", "collapse", "quotient"]


def test_reduce_merges_layered_survival_chain():
    """Test that a patch surviving through time becomes one node."""
    instance = Instance.build(
        num_nodes=4,
        edges=[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
        base_nodes=[0],
        actions=[([1, 2, 3], 1.0)],
        sources=[0],
        rewards={3: 1.0},
    )

    reduced = reduce(sample_cascade(instance, 0, 0))

    assert reduced.nodes == (0, 1)
    assert reduced.action_sets == (frozenset(), frozenset({1}))
    assert reduced.rewards == (0.0, 1.0)


def test_reduce_figure2_values():
    """Test the gadget keeps every strategy value after reduction."""
    sample = sample_cascade(figure2(10), 0, 0)

    reduced = reduce(sample)

    assert reduced.stats is not None
    assert reduced.stats.nodes_sampled == 16
    for bought in all_strategies(4):
        assert evaluate_on_sample(reduced, bought) == evaluate_on_sample(sample, bought)


@pytest.mark.parametrize("seed", range(40))
def test_reduce_preserves_every_strategy(seed):
    """Test the reduced cascade values every strategy like the original."""
    instance = random_network(
        24,
        5,
        seed=seed,
        acyclic=seed % 2 == 0,
        overlap=0.3 if seed % 3 == 0 else 0.0,
        n_sources=1 + seed % 2,
        edge_prob=0.12,
        prob_range=(0.5, 1.0),
    )
    for sample in sample_cascades(instance, 5, seed):
        reduced = reduce(sample)
        for bought in all_strategies(instance.n_actions):
            assert evaluate_on_sample(reduced, bought) == pytest.approx(
                evaluate_on_sample(sample, bought), abs=1e-9
            )


@pytest.mark.parametrize("seed", range(10))
def test_reduce_is_idempotent(seed):
    """Test reducing twice changes nothing."""
    instance = random_network(30, 5, seed=seed, acyclic=False, edge_prob=0.1)
    for sample in sample_cascades(instance, 4, seed):
        once = reduce(sample)
        assert reduce(once) == once


@pytest.mark.parametrize("seed", range(10))
def test_commit_action_preserves_values_with_action(seed):
    """Test committing an action keeps the value of every strategy that buys it."""
    instance = random_network(24, 4, seed=seed, overlap=0.2, edge_prob=0.15)
    for sample in sample_cascades(instance, 3, seed):
        committed = commit_action(sample, 2)
        assert all(2 not in a for a in committed.action_sets)
        for bought in all_strategies(4):
            if 2 in bought:
                assert evaluate_on_sample(committed, bought) == pytest.approx(
                    evaluate_on_sample(sample, bought), abs=1e-9
                )


def test_reduce_pool_and_summary():
    """Test pool reduction keeps order and the summary averages the statistics."""
    instance = Instance.build(
        num_nodes=4,
        edges=[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
        base_nodes=[0, 1, 2],
        actions=[([3], 1.0)],
        sources=[0],
        rewards={2: 1.0, 3: 1.0},
    )
    pool = sample_cascades(instance, 3, 1)

    reduced = reduce_pool(pool)
    summary = summarize_stats([r.stats for r in reduced if r.stats is not None])

    assert [r.scenario_index for r in reduced] == [0, 1, 2]
    assert summary.cascades == 3
    assert summary.mean_nodes_sampled == 4.0
    assert summary.mean_nodes_final == 2.0
    assert summary.mean_edges_final == 1.0
    assert summary.mean_rotations == 2.0
    assert summary.node_ratio == pytest.approx(0.5)


def test_summarize_empty():
    """Test the summary of an empty pool."""
    summary = summarize_stats([])

    assert summary.cascades == 0
    assert summary.node_ratio == 1.0
