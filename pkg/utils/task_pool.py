# utils/task_pool.py
"""
Bounded worker pool.

Work is split the same way everywhere:
- Phase A (concurrent, read-only): score or extract per item.
- Phase B (serial): callers merge the ordered results and decide.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

from tqdm import tqdm

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(
    fn: Callable[[T], R],
    items: Iterable[T],
    workers: int = 1,
    desc: Optional[str] = None,
    progress: bool = False,
) -> list[R]:
    """
    Apply fn to every item and return results in input order.

    The output never depends on `workers`; only wall time does.
    """
    items = list(items)
    if not items:
        return []

    bar = tqdm(total=len(items), desc=desc, disable=not progress, leave=False)
    try:
        if workers <= 1 or len(items) == 1:
            results = []
            for item in items:
                results.append(fn(item))
                bar.update(1)
            return results

        def _run(item: T) -> R:
            out = fn(item)
            bar.update(1)
            return out

        log.debug("[POOL] %d items on %d workers (%s)", len(items), workers, desc or "task")
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # Executor.map yields in submission order
            return list(pool.map(_run, items))
    finally:
        bar.close()
