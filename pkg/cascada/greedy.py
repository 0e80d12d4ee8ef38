"""
Greedy baselines.

Both variants grow a strategy one action at a time: uniform cost (UC) adds
the affordable action with the largest gain in estimated reward, cost-benefit
(CB) the one with the largest gain per unit cost. Gains are estimated on
sampled cascades, either resampled for every score or drawn once and reused,
optionally reduced once or after every commit.
"""

import logging
import math
import time
from collections.abc import Collection, Sequence
from dataclasses import dataclass, field

import pandas as pd

from cascada._internal.seeding import Stream
from cascada.cascade import CascadeSample, marginal_reward, reachable_nodes, sample_cascades
from cascada.core import Instance, Strategy
from cascada.models import EvalMode, GreedyConfig, GreedyVariant
from cascada.preprocess import commit_action, reduce

logger = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "round",
    "action",
    "variant",
    "score",
    "cumulative_cost",
    "wallclock_ms",
    "pool_nodes",
    "pool_edges",
]

# Scores closer than this count as tied
SCORE_TIE = 1e-12
BUDGET_EPS = 1e-9


@dataclass
class GreedyRound:
    """One committed action; round 0 holds the free actions CB takes up front."""

    round: int
    action: int
    score: float
    cumulative_cost: float
    wallclock_ms: float
    pool_nodes: int
    pool_edges: int


@dataclass
class GreedyTrace:
    """Per-round record of a greedy run."""

    variant: GreedyVariant
    eval_mode: EvalMode
    rounds: list[GreedyRound] = field(default_factory=list)

    @property
    def actions(self) -> list[int]:
        return [r.action for r in self.rounds]

    def frame(self, timings: bool = True) -> pd.DataFrame:
        """
        The trace as a table with the fixed trace columns.

        Args:
            timings: Keep wallclock times; otherwise they are written as 0
        """
        records = [
            {
                "round": r.round,
                "action": r.action,
                "variant": self.variant.value,
                "score": r.score,
                "cumulative_cost": r.cumulative_cost,
                "wallclock_ms": r.wallclock_ms if timings else 0.0,
                "pool_nodes": r.pool_nodes,
                "pool_edges": r.pool_edges,
            }
            for r in self.rounds
        ]
        return pd.DataFrame.from_records(records, columns=TRACE_COLUMNS)


def _apply_variant(gain: float, cost: float, variant: GreedyVariant) -> float:
    if variant is GreedyVariant.UC:
        return gain
    if cost == 0:
        raise ValueError("Zero-cost actions cannot be scored by cost-benefit")
    return gain / cost


def score_action(
    pool: Sequence[CascadeSample],
    current: Strategy | Collection[int],
    action: int,
    variant: GreedyVariant | str,
    cost: float,
) -> float:
    """
    Score one candidate action on a pool.

    Args:
        pool: Scoring cascades
        current: Actions bought so far
        action: Candidate action
        variant: UC (mean gain) or CB (mean gain per unit cost)
        cost: The candidate's cost

    Returns:
        The score

    Raises:
        ValueError: If a zero-cost action is scored by CB
    """
    variant = GreedyVariant(variant)
    bought = current.actions if isinstance(current, Strategy) else frozenset(current)
    if not pool:
        return _apply_variant(0.0, cost, variant)
    gain = sum(
        marginal_reward(sample, reachable_nodes(sample, bought), bought, action) for sample in pool
    )
    return _apply_variant(gain / len(pool), cost, variant)


class _PoolScorer:
    """
    Scores on one fixed pool, re-reducing it after commits when asked to.

    Cascades where no node carries an action add nothing to any gain, so only
    the others are searched; averages still divide by the whole pool.
    """

    def __init__(self, pool: list[CascadeSample], repeat: bool) -> None:
        self.pool = pool
        self.repeat = repeat
        self._priced = [s for s in pool if s.referenced_actions]

    def gains(self, bought: frozenset[int], candidates: Sequence[int], round_: int) -> dict[int, float]:
        totals = dict.fromkeys(candidates, 0.0)
        for sample in self._priced:
            reached = reachable_nodes(sample, bought)
            for action in candidates:
                if action in sample.referenced_actions:
                    totals[action] += marginal_reward(sample, reached, bought, action)
        count = len(self.pool)
        return {a: (t / count if count else 0.0) for a, t in totals.items()}

    def commit(self, action: int) -> None:
        if not self.repeat:
            return
        self.pool = [
            commit_action(sample, action) if action in sample.referenced_actions else sample
            for sample in self.pool
        ]
        self._priced = [s for s in self.pool if s.referenced_actions]

    def size(self) -> tuple[int, int]:
        return sum(s.n_nodes for s in self.pool), sum(s.n_edges for s in self.pool)


class _FreshScorer:
    """Scores every (round, action) pair on its own freshly sampled pool."""

    def __init__(self, instance: Instance, n: int, seed: int) -> None:
        self.instance = instance
        self.n = n
        self.seed = seed
        self.last_size = (0, 0)

    def gains(self, bought: frozenset[int], candidates: Sequence[int], round_: int) -> dict[int, float]:
        gains: dict[int, float] = {}
        nodes = edges = 0
        for action in candidates:
            pool = sample_cascades(self.instance, self.n, (self.seed, Stream.FRESH, round_, action))
            nodes += sum(s.n_nodes for s in pool)
            edges += sum(s.n_edges for s in pool)
            gains[action] = score_action(pool, bought, action, GreedyVariant.UC, 0.0)
        self.last_size = (nodes, edges)
        return gains

    def commit(self, action: int) -> None:
        pass

    def size(self) -> tuple[int, int]:
        return self.last_size


def _greedy(
    scorer: _PoolScorer | _FreshScorer,
    costs: Sequence[float],
    budget: float,
    variant: GreedyVariant,
    eval_mode: EvalMode,
) -> tuple[Strategy, GreedyTrace]:
    trace = GreedyTrace(variant=variant, eval_mode=eval_mode)
    bought: set[int] = set()
    spent = 0.0

    if variant is GreedyVariant.CB:
        for action, cost in enumerate(costs, start=1):
            if cost == 0:
                bought.add(action)
                scorer.commit(action)
                nodes, edges = scorer.size()
                trace.rounds.append(GreedyRound(0, action, math.nan, spent, 0.0, nodes, edges))

    round_ = 1
    while True:
        remaining = budget - spent
        candidates = [
            a
            for a, cost in enumerate(costs, start=1)
            if a not in bought and cost <= remaining + BUDGET_EPS
        ]
        if not candidates:
            break
        started = time.perf_counter()
        gains = scorer.gains(frozenset(bought), candidates, round_)

        best, best_score = candidates[0], -math.inf
        for action in candidates:
            score = _apply_variant(gains[action], costs[action - 1], variant)
            if score > best_score + SCORE_TIE:
                best, best_score = action, score
        if best_score <= 0:
            break

        bought.add(best)
        spent += costs[best - 1]
        scorer.commit(best)
        elapsed = (time.perf_counter() - started) * 1000.0
        nodes, edges = scorer.size()
        trace.rounds.append(GreedyRound(round_, best, best_score, spent, elapsed, nodes, edges))
        logger.info("Greedy round %d: action %d, score %.6f", round_, best, best_score)
        round_ += 1

    return Strategy.from_actions(costs, bought), trace


def greedy_on_pool(
    pool: Sequence[CascadeSample],
    costs: Sequence[float],
    budget: float,
    variant: GreedyVariant | str = GreedyVariant.CB,
    eval_mode: EvalMode | str = EvalMode.REUSE,
) -> tuple[Strategy, GreedyTrace]:
    """
    Run greedy on a given pool.

    Args:
        pool: Training cascades
        costs: Action costs
        budget: Purchase budget
        variant: UC or CB
        eval_mode: One of the reuse modes

    Returns:
        The strategy and its trace
    """
    variant = GreedyVariant(variant)
    eval_mode = EvalMode(eval_mode)
    if eval_mode is EvalMode.FRESH:
        raise ValueError("fresh mode samples its own cascades; use greedy_select")
    cascades = list(pool)
    if eval_mode in (EvalMode.REUSE_PRE, EvalMode.REUSE_PRE_REPEAT):
        cascades = [reduce(c) for c in cascades]
    scorer = _PoolScorer(cascades, repeat=eval_mode is EvalMode.REUSE_PRE_REPEAT)
    return _greedy(scorer, costs, budget, variant, eval_mode)


def greedy_select(instance: Instance, cfg: GreedyConfig) -> tuple[Strategy, GreedyTrace]:
    """
    Run a greedy baseline on an instance.

    Args:
        instance: The instance
        cfg: Variant, evaluation mode, cascade count, budget and seed

    Returns:
        The strategy and its trace
    """
    budget = cfg.budget if cfg.budget is not None else instance.budget
    if cfg.eval_mode is EvalMode.FRESH:
        scorer = _FreshScorer(instance, cfg.n, cfg.seed)
        return _greedy(scorer, instance.costs, budget, cfg.variant, cfg.eval_mode)
    pool = sample_cascades(instance, cfg.n, (cfg.seed, Stream.GREEDY))
    return greedy_on_pool(pool, instance.costs, budget, cfg.variant, cfg.eval_mode)
