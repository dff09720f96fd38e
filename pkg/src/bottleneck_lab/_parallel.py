"""Deterministic fan-out for independent solver restarts."""
import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    """Worker cap from ``BOTTLENECK_LAB_THREADS`` (default: CPU count)."""
    raw = os.environ.get("BOTTLENECK_LAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def pmap(fn, items):
    """Map ``fn`` over ``items`` preserving order.

    The compiled kernels release the GIL, so threads give real parallelism
    there; results are identical to the sequential map either way.
    """
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
