"""Order-preserving process fan-out."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def parallel_map(func, items, n_jobs=1):
    """``[func(x) for x in items]``, optionally across worker processes.

    Results come back in input order, so output never depends on scheduling.
    """
    items = list(items)
    if n_jobs is None or n_jobs <= 1 or len(items) < 2:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * n_jobs))))
