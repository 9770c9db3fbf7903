"""Counter-keyed random substreams.

Chunk ``k`` of every Monte Carlo run draws from its own generator, derived
from ``(seed, k)`` alone, so results never depend on how chunks are spread
over worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

DEFAULT_SEED = 20240101
DEFAULT_CHUNK_SIZE = 8192

T = TypeVar("T")


def chunk_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(index,))))


def chunk_sizes(total: int, chunk_size: int = DEFAULT_CHUNK_SIZE) -> list[int]:
    if total < 0:
        raise ValueError(f"Sample count must be non-negative, got {total}")
    if chunk_size < 1:
        raise ValueError(f"Chunk size must be positive, got {chunk_size}")
    full, rest = divmod(total, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(
    fn: Callable[[np.random.Generator, int, int], T],
    total: int,
    *,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
) -> list[T]:
    """Run ``fn(rng, size, index)`` over every chunk; results come back in chunk order."""
    sizes = chunk_sizes(total, chunk_size)
    jobs = [(chunk_generator(seed, index), size, index) for index, size in enumerate(sizes)]
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
