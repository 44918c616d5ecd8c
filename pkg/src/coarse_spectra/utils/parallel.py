"""
Bounded worker pool for embarrassingly parallel scans.

Modified: 2026-10-19
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from coarse_spectra.core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "COARSE_SPECTRA_THREADS"


def worker_count(threads: Optional[int] = None) -> int:
    """
    Resolve the number of worker threads.

    Args:
        threads: Explicit request; falls back to COARSE_SPECTRA_THREADS, then the core count

    Returns:
        Worker count, at least 1
    """
    if threads is None:
        raw = os.getenv(THREADS_ENV)
        if raw:
            try:
                threads = int(raw)
            except ValueError as e:
                raise ConfigurationError(f"{THREADS_ENV} must be an integer, got '{raw}'") from e
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigurationError(f"worker count must be >= 1, got {threads}")
    return threads


def parallel_map(
    fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None
) -> List[R]:
    """
    Apply fn to every item, preserving input order.

    Results come back in the order of items regardless of scheduling, so
    reports built from them are deterministic.

    Args:
        fn: Pure function of one item
        items: Work items
        threads: Worker cap (see worker_count)

    Returns:
        List of results aligned with items
    """
    work = list(items)
    workers = min(worker_count(threads), max(len(work), 1))
    if workers == 1:
        return [fn(item) for item in work]

    logger.debug(f"parallel_map: {len(work)} items on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, work))
