"""Ordered parallel map.

The numba kernel releases the GIL, so a thread pool gives real parallelism without
pickling parameter objects. Results always come back in input order, which keeps every
output independent of the thread count.
"""

from __future__ import annotations

import os
from typing import Callable, Iterable, TypeVar

from joblib import Parallel, delayed

T = TypeVar("T")
R = TypeVar("R")


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    return Parallel(n_jobs=threads, prefer="threads")(delayed(fn)(x) for x in items)
