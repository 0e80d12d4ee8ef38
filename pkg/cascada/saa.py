"""
Replicated sample average approximation.

Each replication samples its own training cascades, solves the resulting
deterministic problem exactly and records the best bound found. The mean
bound estimates an upper bound on the optimum; the candidate that scores best
on a validation pool is re-evaluated on a test pool for the lower bound.
"""

import logging
import math
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from functools import partial

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy.stats import norm

from cascada._internal.seeding import Stream
from cascada._internal.workers import ordered_map
from cascada.cascade import CascadeSample, pool_estimate, sample_cascades
from cascada.core import Instance, Strategy
from cascada.exceptions import NoIncumbentError
from cascada.greedy import greedy_on_pool
from cascada.mip import SolveStatus, build_mip, solve_exact
from cascada.models import EvalMode, GreedyVariant, SaaConfig
from cascada.preprocess import ReductionStats, StatsSummary, reduce, summarize_stats

logger = logging.getLogger(__name__)

# Two-sided 95% normal quantile
Z95 = float(norm.ppf(0.975))

SWEEP_COLUMNS = ["budget", "method", "value", "stderr", "saa_upper_bound"]
GAP_COLUMNS = ["N", "upper", "upper_ci", "lower", "lower_ci", "gap"]
METHODS = ("saa", "greedy-uc", "greedy-cb")


class SaaReport(BaseModel):
    """Bounds and candidates of a replicated SAA run."""

    seed: int
    budget: float
    m: int
    n: int
    n_valid: int
    n_test: int
    upper_bounds: list[float]
    statuses: list[SolveStatus]
    candidates: list[Strategy | None]
    validation_scores: list[float | None]
    selected_index: int
    selected: Strategy
    upper_mean: float
    upper_ci: float
    lower_mean: float
    lower_stderr: float
    lower_ci: float
    gap: float
    reduction: StatsSummary | None = None

    @property
    def value(self) -> float:
        """Test-pool value of the selected strategy."""
        return self.lower_mean


@dataclass
class _Replication:
    status: SolveStatus
    upper_bound: float
    strategy: Strategy | None
    stats: list[ReductionStats]


def _replicate(instance: Instance, cfg: SaaConfig, budget: float, index: int) -> _Replication:
    started = time.perf_counter()
    cascades: list[CascadeSample] = sample_cascades(instance, cfg.n, (cfg.seed, Stream.TRAIN, index))
    stats: list[ReductionStats] = []
    if cfg.preprocess:
        reduced = [reduce(c) for c in cascades]
        stats = [r.stats for r in reduced if r.stats is not None]
        cascades = list(reduced)
    model = build_mip(cascades, instance.costs, budget)
    result = solve_exact(model, node_limit=cfg.node_limit)
    logger.info(
        "Replication %d: %s, bound %.6f, %d nodes, %.1f ms",
        index,
        result.status,
        result.upper_bound,
        result.nodes_explored,
        (time.perf_counter() - started) * 1000.0,
    )
    return _Replication(result.status, result.upper_bound, result.best_strategy, stats)


def run_saa(
    instance: Instance,
    cfg: SaaConfig,
    test_pool: Sequence[CascadeSample] | None = None,
) -> SaaReport:
    """
    Run M replications, select a candidate and estimate both bounds.

    Args:
        instance: The instance
        cfg: Replication counts, budget, seed and solver limits
        test_pool: Pre-sampled test cascades (sampled from the test stream otherwise)

    Returns:
        The report

    Raises:
        NoIncumbentError: If no replication produced a strategy
    """
    budget = cfg.budget if cfg.budget is not None else instance.budget
    replications = ordered_map(
        partial(_replicate, instance, cfg, budget), range(cfg.m), jobs=cfg.jobs
    )

    candidates = [r.strategy for r in replications]
    if all(c is None for c in candidates):
        raise NoIncumbentError("No replication found a strategy before its node limit")

    valid_pool = sample_cascades(instance, cfg.n_valid, (cfg.seed, Stream.VALID), jobs=cfg.jobs)
    scored: dict[frozenset[int], float] = {}
    scores: list[float | None] = []
    for candidate in candidates:
        if candidate is None:
            scores.append(None)
            continue
        key = candidate.actions
        if key not in scored:
            scored[key] = pool_estimate(valid_pool, key)[0]
        scores.append(scored[key])

    selected_index = -1
    best_score = -math.inf
    for index, score in enumerate(scores):
        if score is not None and score > best_score:
            selected_index, best_score = index, score
    selected = candidates[selected_index]
    assert selected is not None

    if test_pool is None:
        test_pool = sample_cascades(instance, cfg.n_test, (cfg.seed, Stream.TEST), jobs=cfg.jobs)
    lower_mean, lower_stderr = pool_estimate(test_pool, selected)

    bounds = np.array([r.upper_bound for r in replications], dtype=float)
    upper_mean = float(bounds.mean())
    upper_ci = Z95 * float(bounds.std(ddof=1)) / math.sqrt(len(bounds)) if len(bounds) > 1 else 0.0

    all_stats = [s for r in replications for s in r.stats]
    report = SaaReport(
        seed=cfg.seed,
        budget=budget,
        m=cfg.m,
        n=cfg.n,
        n_valid=cfg.n_valid,
        n_test=len(test_pool),
        upper_bounds=bounds.tolist(),
        statuses=[r.status for r in replications],
        candidates=candidates,
        validation_scores=scores,
        selected_index=selected_index,
        selected=selected,
        upper_mean=upper_mean,
        upper_ci=upper_ci,
        lower_mean=lower_mean,
        lower_stderr=lower_stderr,
        lower_ci=Z95 * lower_stderr,
        gap=upper_mean - lower_mean,
        reduction=summarize_stats(all_stats) if all_stats else None,
    )
    logger.info(
        "SAA: upper %.4f +/- %.4f, lower %.4f +/- %.4f",
        report.upper_mean,
        report.upper_ci,
        report.lower_mean,
        report.lower_ci,
    )
    return report


def _method_names(methods: Iterable[str]) -> list[str]:
    requested = {m.lower() for m in methods}
    unknown = requested - set(METHODS)
    if unknown:
        raise ValueError(f"Unknown methods: {sorted(unknown)}")
    return [m for m in METHODS if m in requested]


def budget_sweep(
    instance: Instance,
    budgets: Sequence[float],
    cfg: SaaConfig,
    methods: Iterable[str] = METHODS,
    greedy_n: int | None = None,
) -> pd.DataFrame:
    """
    Compare methods across budgets on one shared test pool.

    Greedy runs on one reused, reduced pool of ``greedy_n`` training cascades
    (``m * n`` by default) re-reduced after each commit.

    Args:
        instance: The instance
        budgets: Budgets to run
        cfg: SAA configuration (its budget is ignored)
        methods: Any of ``saa``, ``greedy-uc``, ``greedy-cb``
        greedy_n: Training cascades for the greedy methods

    Returns:
        One row per (budget, method) with the sweep columns
    """
    if not budgets:
        raise ValueError("budgets must not be empty")
    names = _method_names(methods)
    test_pool = sample_cascades(instance, cfg.n_test, (cfg.seed, Stream.TEST), jobs=cfg.jobs)
    greedy_pool: list[CascadeSample] = []
    if any(name.startswith("greedy") for name in names):
        greedy_pool = sample_cascades(
            instance, greedy_n or cfg.m * cfg.n, (cfg.seed, Stream.GREEDY), jobs=cfg.jobs
        )
        greedy_pool = [reduce(c) for c in greedy_pool]

    rows = []
    for budget in budgets:
        for name in names:
            upper = math.nan
            if name == "saa":
                report = run_saa(instance, replace(cfg, budget=float(budget)), test_pool=test_pool)
                value, stderr, upper = report.lower_mean, report.lower_stderr, report.upper_mean
            else:
                variant = GreedyVariant.UC if name == "greedy-uc" else GreedyVariant.CB
                strategy, _ = greedy_on_pool(
                    greedy_pool, instance.costs, float(budget), variant, EvalMode.REUSE_PRE_REPEAT
                )
                value, stderr = pool_estimate(test_pool, strategy)
            rows.append(
                {
                    "budget": float(budget),
                    "method": name,
                    "value": value,
                    "stderr": stderr,
                    "saa_upper_bound": upper,
                }
            )
            logger.info("Sweep budget %s %s: %.4f", budget, name, value)
    return pd.DataFrame.from_records(rows, columns=SWEEP_COLUMNS)


def gap_vs_training_size(
    instance: Instance,
    sizes: Sequence[int],
    cfg: SaaConfig,
) -> pd.DataFrame:
    """
    SAA bounds as a function of the training size N.

    Args:
        instance: The instance
        sizes: Training sizes
        cfg: SAA configuration (its ``n`` is replaced by each size)

    Returns:
        One row per size with the gap columns
    """
    if not sizes:
        raise ValueError("sizes must not be empty")
    test_pool = sample_cascades(instance, cfg.n_test, (cfg.seed, Stream.TEST), jobs=cfg.jobs)
    rows = []
    for size in sizes:
        report = run_saa(instance, replace(cfg, n=int(size)), test_pool=test_pool)
        rows.append(
            {
                "N": int(size),
                "upper": report.upper_mean,
                "upper_ci": report.upper_ci,
                "lower": report.lower_mean,
                "lower_ci": report.lower_ci,
                "gap": report.gap,
            }
        )
    return pd.DataFrame.from_records(rows, columns=GAP_COLUMNS)
