"""Chunked, seed-split parallel execution.

Work is cut into chunks whose boundaries depend only on the problem size, and
chunk ``i`` draws from ``rng.stream(seed, i)``. Results are concatenated in
chunk order, so output is identical for any thread count.
"""
import os
from concurrent.futures import ThreadPoolExecutor

_threads = None


def default_threads():
    return _threads or os.cpu_count() or 1


def set_threads(n):
    global _threads
    _threads = None if n is None else max(1, int(n))


def chunk_bounds(n, chunk):
    return [(a, min(a + chunk, n)) for a in range(0, n, chunk)]


def map_chunks(fn, n_chunks, threads=None):
    """[fn(0), ..., fn(n_chunks-1)], possibly evaluated concurrently."""
    threads = threads or default_threads()
    if threads <= 1 or n_chunks <= 1:
        return [fn(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(n_chunks)))
