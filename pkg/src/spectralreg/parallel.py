"""Deterministic thread-pool helpers.

Work is decomposed into shards of fixed size before any thread is involved,
and per-shard random streams are spawned from a single seed sequence, so
results are byte-identical for every thread count including one.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "SPECTRAL_REG_THREADS"


def resolve_threads(requested: Optional[int] = None) -> int:
    """Thread count: env override, then the explicit request, then all cores."""
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
        if value < 1:
            raise ValueError(f"{THREADS_ENV} must be >= 1")
        return value
    if requested is not None:
        if requested < 1:
            raise ValueError("thread count must be >= 1")
        return requested
    return os.cpu_count() or 1


def shard_sizes(count: int, shard: int) -> List[int]:
    """Fixed-size decomposition of ``count`` items (last shard may be short)."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if shard < 1:
        raise ValueError("shard size must be >= 1")
    full, rest = divmod(count, shard)
    sizes = [shard] * full
    if rest:
        sizes.append(rest)
    return sizes


def thread_map(fn: Callable[[T], R], items: Sequence[T], threads: int) -> List[R]:
    """Map preserving input order; sequential when one thread is enough."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
