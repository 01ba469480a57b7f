import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    """Worker threads allowed by ``PSEUDOSPEC_THREADS`` (0 or unset means auto)."""
    try:
        n = int(os.environ.get("PSEUDOSPEC_THREADS", "0"))
    except ValueError:
        n = 0
    if n <= 0:
        n = min(8, os.cpu_count() or 1)
    return n


def map_ordered(fn, items):
    """``list(map(fn, items))`` on a thread pool; output order follows input order."""
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
