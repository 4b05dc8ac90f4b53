from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable

import psutil


def default_workers() -> int:
    """Machine parallelism, the default for the --workers knob"""
    return psutil.cpu_count(logical=True) or 1


def parallel_map(
    func: Callable, items: Iterable, workers: int | None = None
) -> list:
    """
    Map `func` over `items` on a thread pool. Results are returned in input
    order, so any reduction over them is deterministic.

    The numerical kernels spend their time inside numpy, which releases the
    GIL for the array operations.
    """
    items = list(items)
    workers = workers or default_workers()
    if workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]

    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))
