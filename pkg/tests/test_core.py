"""Tests for the core module."""

import itertools

import numpy as np
import pytest

from cascada.cascade import sample_cascades
from cascada.core import (
    Action,
    Edge,
    Instance,
    Strategy,
    edge_purchase_gadget,
    purchased_nodes,
    reachable,
    reachable_under,
    source_purchase_gadget,
    validate,
)
from cascada.exceptions import (
    DuplicateCandidateError,
    EdgeNotFoundError,
    GraphError,
    InstanceValidationError,
    StrategyError,
)
from cascada.generators import figure2, random_network
from cascada.mip import build_mip, solve_exact


def chain_instance() -> Instance:
    """0 (free source) -> 1 (action 1) -> 2 (action 2), certain edges."""
    return Instance.build(
        num_nodes=3,
        edges=[(0, 1, 1.0), (1, 2, 1.0)],
        base_nodes=[0],
        actions=[([1], 2.0), ([2], 3.0)],
        sources=[0],
        rewards={1: 1.0, 2: 5.0},
        budget=5.0,
    )


def test_build_normalizes_parts():
    """Test Instance.build with loosely typed inputs."""
    instance = chain_instance()

    assert instance.num_nodes == 3
    assert instance.edges == (Edge(0, 1, 1.0), Edge(1, 2, 1.0))
    assert instance.rewards == (0.0, 1.0, 5.0)
    assert instance.n_actions == 2
    assert instance.costs == (2.0, 3.0)
    assert instance.total_cost == 5.0
    assert instance.action(2) == Action(frozenset({2}), 3.0)


def test_action_lookup_out_of_range():
    """Test that action ids are 1-based."""
    instance = chain_instance()

    with pytest.raises(StrategyError, match="out of range"):
        instance.action(0)
    with pytest.raises(StrategyError, match="out of range"):
        instance.action(3)


def test_node_actions_marks_base_nodes_free():
    """Test that a base node listed by an action still has an empty action set."""
    instance = Instance.build(
        num_nodes=2,
        base_nodes=[0],
        actions=[([0, 1], 1.0)],
        sources=[0],
        rewards={1: 1.0},
    )

    assert instance.node_actions == (frozenset(), frozenset({1}))


def test_with_budget_copies():
    """Test with_budget leaves the original untouched."""
    instance = chain_instance()
    other = instance.with_budget(1.0)

    assert other.budget == 1.0
    assert instance.budget == 5.0
    assert other.edges == instance.edges


def test_validate_accepts_figure2():
    """Test a valid instance produces an ok report."""
    report = validate(figure2(10))

    assert report.ok
    assert report.violations == []


def test_validate_reports_all_violations():
    """Test that every violation is collected, not just the first."""
    instance = Instance(
        num_nodes=3,
        edges=(Edge(0, 1, 1.5), Edge(0, 1, 0.5)),
        base_nodes=frozenset({0}),
        actions=(Action(frozenset({1}), -1.0),),
        sources=frozenset({0}),
        rewards=(0.0, -2.0, 1.0),
    )

    report = validate(instance)
    text = "\n".join(report.violations)

    assert not report.ok
    assert "probability out of range" in text
    assert "duplicate edge (0, 1)" in text
    assert "negative reward" in text
    assert "negative cost" in text
    assert "node 2 is never purchasable" in text


def test_validate_warnings():
    """Test that redundant actions and missing targets only warn."""
    instance = Instance.build(
        num_nodes=2,
        base_nodes=[0],
        actions=[([0, 1], 1.0)],
        sources=[0],
    )

    report = validate(instance)

    assert report.ok
    assert any("redundant on base nodes [0]" in w for w in report.warnings)
    assert "no targets" in report.warnings


def test_check_raises_with_violations():
    """Test Instance.check raises InstanceValidationError carrying the list."""
    instance = Instance.build(num_nodes=2, base_nodes=[0], sources=[0], rewards={1: 1.0})

    with pytest.raises(InstanceValidationError, match="never purchasable") as exc_info:
        instance.check()

    assert exc_info.value.violations == ["node 1 is never purchasable"]


def test_strategy_from_actions():
    """Test building a strategy from 1-based ids."""
    strategy = Strategy.from_actions([2.0, 3.0, 4.0], [1, 3])

    assert strategy.purchased == (True, False, True)
    assert strategy.cost == 6.0
    assert strategy.actions == frozenset({1, 3})
    assert strategy.n_actions == 3
    assert strategy.is_feasible(6.0)
    assert not strategy.is_feasible(5.0)


def test_strategy_rejects_unknown_action():
    """Test that ids outside 1..L are rejected."""
    with pytest.raises(StrategyError, match="Action 4 out of range 1..3"):
        Strategy.from_actions([1.0, 1.0, 1.0], [4])


def test_strategy_add():
    """Test adding actions one at a time."""
    strategy = Strategy.empty(2).add(2, 3.0)

    assert strategy.actions == frozenset({2})
    assert strategy.cost == 3.0
    assert strategy.add(2, 3.0) is strategy


def test_purchased_nodes():
    """Test V(y) is the base set plus every bought action's nodes."""
    instance = chain_instance()

    assert purchased_nodes(instance, Strategy.empty(2)) == frozenset({0})
    assert purchased_nodes(instance, Strategy.for_instance(instance, [2])) == frozenset({0, 2})


def test_purchased_nodes_length_mismatch():
    """Test a strategy over the wrong number of actions is rejected."""
    with pytest.raises(StrategyError, match="Strategy has 3 actions"):
        purchased_nodes(chain_instance(), Strategy.empty(3))


def test_reachable_requires_purchased_sources():
    """Test that an unpurchased source is not reached."""
    edges = [(0, 1), (1, 2)]

    assert reachable(edges, {0, 1, 2}, {0}) == frozenset({0, 1, 2})
    assert reachable(edges, {1, 2}, {0}) == frozenset()
    assert reachable(edges, {0, 2}, {0}) == frozenset({0})


def test_reachable_under_strategy():
    """Test reachability on the instance graph."""
    instance = chain_instance()

    assert reachable_under(instance, Strategy.for_instance(instance, [2])) == frozenset({0})
    assert reachable_under(instance, Strategy.for_instance(instance, [1, 2])) == frozenset(
        {0, 1, 2}
    )


def test_reachable_under_live_only():
    """Test that live_only ignores uncertain edges."""
    instance = Instance.build(
        num_nodes=2,
        edges=[(0, 1, 0.5)],
        base_nodes=[0, 1],
        sources=[0],
        rewards={1: 1.0},
    )
    y = Strategy.empty(0)

    assert reachable_under(instance, y) == frozenset({0, 1})
    assert reachable_under(instance, y, live_only=True) == frozenset({0})


def test_edge_purchase_gadget():
    """Test an edge becomes purchasable through a fresh node."""
    instance = Instance.build(
        num_nodes=2,
        edges=[(0, 1, 0.4)],
        base_nodes=[0, 1],
        sources=[0],
        rewards={1: 1.0},
    )

    gadget = edge_purchase_gadget(instance, [(0, 1)], [2.5])

    assert gadget.num_nodes == 3
    assert gadget.edges == (Edge(0, 2, 0.4), Edge(2, 1, 1.0))
    assert gadget.actions == (Action(frozenset({2}), 2.5, "edge 0->1"),)
    assert gadget.rewards == (0.0, 1.0, 0.0)
    assert validate(gadget).ok
    assert reachable_under(gadget, Strategy.empty(1)) == frozenset({0})
    assert reachable_under(gadget, Strategy.for_instance(gadget, [1])) == frozenset({0, 1, 2})


def test_edge_purchase_gadget_missing_edge():
    """Test that an unknown edge raises EdgeNotFoundError."""
    with pytest.raises(EdgeNotFoundError, match=r"Edge \(1, 0\) not found"):
        edge_purchase_gadget(chain_instance(), [(1, 0)], [1.0])


def test_source_purchase_gadget():
    """Test a node can be bought as an extra source."""
    instance = chain_instance()

    gadget = source_purchase_gadget(instance, [2], [0.5])

    assert gadget.num_nodes == 4
    assert gadget.sources == frozenset({0, 3})
    assert Edge(3, 2, 1.0) in gadget.edges
    assert gadget.actions[-1] == Action(frozenset({3}), 0.5, "seed 2")
    # seeding node 2 still needs node 2 itself to be bought
    y = Strategy.for_instance(gadget, [3])
    assert reachable_under(gadget, y) == frozenset({0, 3})
    y = Strategy.for_instance(gadget, [2, 3])
    assert reachable_under(gadget, y) == frozenset({0, 2, 3})


def test_source_purchase_gadget_duplicates():
    """Test duplicate and unknown candidates are rejected."""
    with pytest.raises(DuplicateCandidateError, match="Duplicate source candidate: 1"):
        source_purchase_gadget(chain_instance(), [1, 1], [1.0, 1.0])
    with pytest.raises(GraphError, match="not a node"):
        source_purchase_gadget(chain_instance(), [7], [1.0])


def strategies(n_actions: int):
    """Every subset of 1..n_actions."""
    actions = range(1, n_actions + 1)
    return itertools.chain.from_iterable(
        itertools.combinations(actions, size) for size in range(n_actions + 1)
    )


def reward_of(instance: Instance, nodes) -> float:
    return sum(instance.rewards[v] for v in nodes)


def test_edge_gadget_on_one_of_two_paths():
    """Test only the gated path depends on the new action."""
    instance = Instance.build(
        num_nodes=5,
        edges=[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 4, 1.0)],
        base_nodes=range(5),
        sources=[0],
        rewards={3: 1.0, 4: 1.0},
    )

    gadget = edge_purchase_gadget(instance, [(2, 4)], [1.0])

    assert reachable_under(gadget, Strategy.empty(1)) == frozenset({0, 1, 2, 3})
    assert reachable_under(gadget, Strategy.for_instance(gadget, [1])) == frozenset(range(6))


@pytest.mark.parametrize("seed", range(10))
def test_edge_gadget_preserves_every_strategy(seed):
    """Test each strategy reaches what its original actions and bought edges would."""
    instance = random_network(12, 4, seed=seed, edge_prob=0.3, acyclic=seed % 2 == 0)
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(instance.edges), size=min(3, len(instance.edges)), replace=False)
    gated = [(instance.edges[i].src, instance.edges[i].dst) for i in sorted(picks)]
    gadget = edge_purchase_gadget(instance, gated, [1.0] * len(gated))
    original = range(instance.num_nodes)

    for bought in strategies(gadget.n_actions):
        kept = {a for a in bought if a <= instance.n_actions}
        open_edges = {gated[a - instance.n_actions - 1] for a in bought if a > instance.n_actions}
        graph = [
            e for e in instance.edges if (e.src, e.dst) not in gated or (e.src, e.dst) in open_edges
        ]
        expected = reachable(
            graph,
            purchased_nodes(instance, Strategy.for_instance(instance, kept)),
            instance.sources,
        )

        got = reachable_under(gadget, Strategy.for_instance(gadget, bought))

        assert got.intersection(original) == expected
        assert reward_of(gadget, got) == reward_of(instance, expected)


@pytest.mark.parametrize("seed", range(10))
def test_source_gadget_preserves_every_strategy(seed):
    """Test each strategy reaches what its original actions and seeded candidates would."""
    instance = random_network(12, 4, seed=seed, edge_prob=0.3)
    rng = np.random.default_rng(seed)
    candidates = sorted(int(v) for v in rng.choice(instance.num_nodes, size=3, replace=False))
    gadget = source_purchase_gadget(instance, candidates, [1.0, 2.0, 3.0])
    original = range(instance.num_nodes)

    for bought in strategies(gadget.n_actions):
        kept = {a for a in bought if a <= instance.n_actions}
        seeded = {candidates[a - instance.n_actions - 1] for a in bought if a > instance.n_actions}
        expected = reachable(
            instance.edges,
            purchased_nodes(instance, Strategy.for_instance(instance, kept)),
            instance.sources | seeded,
        )

        got = reachable_under(gadget, Strategy.for_instance(gadget, bought))

        assert got.intersection(original) == expected
        assert reward_of(gadget, got) == reward_of(instance, expected)


@pytest.mark.parametrize("seed", range(5))
def test_one_affordable_seed_matches_brute_force(seed):
    """Test the exact solver picks the best single seed when the budget buys one."""
    rng = np.random.default_rng(seed)
    edges = [
        (u, v, float(rng.uniform(0.2, 0.9)))
        for u in range(10)
        for v in range(u + 1, 10)
        if rng.random() < 0.25
    ]
    instance = Instance.build(
        num_nodes=10, edges=edges, base_nodes=range(10), sources=[0], rewards=[1.0] * 10
    )
    gadget = source_purchase_gadget(instance, [3, 5, 7, 9], [1.0] * 4).with_budget(1.0)
    model = build_mip(sample_cascades(gadget, 30, seed), gadget.costs, gadget.budget)

    result = solve_exact(model)

    best = max(model.evaluate(frozenset({a})) for a in range(1, 5))
    assert result.best_strategy is not None
    assert len(result.best_strategy.actions) == 1
    assert result.best_value == pytest.approx(best, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_reachable_is_monotone(seed):
    """Test adding purchased nodes never removes reached nodes."""
    instance = random_network(20, 3, seed=seed, edge_prob=0.2, acyclic=False)
    rng = np.random.default_rng(seed)
    order = rng.permutation(instance.num_nodes).tolist()

    previous: frozenset[int] = frozenset()
    for size in range(instance.num_nodes + 1):
        current = reachable(instance.edges, order[:size], instance.sources)
        assert previous <= current
        previous = current
    assert previous == reachable(reversed(instance.edges), order, instance.sources)


@pytest.mark.parametrize("seed", range(5))
def test_purchased_nodes_is_monotone(seed):
    """Test buying more actions never removes purchased nodes."""
    instance = random_network(20, 5, seed=seed, overlap=0.3)

    for bought in strategies(instance.n_actions):
        smaller = purchased_nodes(instance, Strategy.for_instance(instance, bought))
        for extra in range(1, instance.n_actions + 1):
            larger = purchased_nodes(instance, Strategy.for_instance(instance, {*bought, extra}))
            assert smaller <= larger
