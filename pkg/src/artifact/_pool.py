"""Tiny worker-pool helper; results come back in block order."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_THREADS = None


def set_threads(n: int | None) -> None:
    global _THREADS
    _THREADS = n


def threads() -> int:
    return _THREADS or os.cpu_count() or 1


def map_blocks(fn, items, n_threads: int | None = None) -> list:
    items = list(items)
    n = n_threads or threads()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
