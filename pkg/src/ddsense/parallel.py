"""Order-preserving parallel map used by every sweep."""

import os
from concurrent.futures import ThreadPoolExecutor


def resolve_threads(threads):
    if threads in (None, "auto", 0):
        return os.cpu_count() or 1
    return max(int(threads), 1)


def make_executor(threads):
    """Thread pool for ``threads`` workers, or ``None`` for serial execution."""
    n = resolve_threads(threads)
    return ThreadPoolExecutor(max_workers=n) if n > 1 else None


def ordered_map(fn, items, executor=None):
    """``[fn(x) for x in items]``; results keep input order whatever the pool size."""
    items = list(items)
    if executor is None:
        return [fn(x) for x in items]
    return list(executor.map(fn, items))
