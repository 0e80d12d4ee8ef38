"""
Ordered worker pool.

Sampling, preprocessing and SAA replications are independent work units.
This module runs them inline or on a process pool, always returning results
in input order so the output never depends on the job count.
"""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """
    Apply ``func`` to every item, possibly in parallel.

    Args:
        func: A picklable, module-level function
        items: Work units
        jobs: Number of worker processes (1 runs inline)

    Returns:
        Results in the order of ``items``
    """
    work = list(items)
    if jobs <= 1 or len(work) <= 1:
        return [func(item) for item in work]

    workers = min(jobs, len(work))
    logger.debug("Dispatching %d work units to %d workers", len(work), workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, work, chunksize=max(1, len(work) // (4 * workers))))
