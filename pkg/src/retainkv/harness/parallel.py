"""Trial-level parallelism. Each trial is sequential; results come back in seed order."""

from collections.abc import Callable, Sequence
from typing import TypeVar

import anyio
import anyio.to_thread
from loguru import logger

T = TypeVar("T")


async def _gather(fn: Callable[[int], T], seeds: Sequence[int], jobs: int) -> list[T]:
    limiter = anyio.CapacityLimiter(jobs)
    results: dict[int, T] = {}

    async def one(index: int, seed: int) -> None:
        results[index] = await anyio.to_thread.run_sync(fn, seed, limiter=limiter)

    async with anyio.create_task_group() as tg:
        for index, seed in enumerate(seeds):
            tg.start_soon(one, index, seed)
    return [results[i] for i in range(len(seeds))]


def run_trials(fn: Callable[[int], T], seeds: Sequence[int], jobs: int = 1) -> list[T]:
    if jobs <= 1 or len(seeds) <= 1:
        return [fn(seed) for seed in seeds]
    logger.debug(f"Running {len(seeds)} trials on {jobs} workers")
    return anyio.run(_gather, fn, list(seeds), jobs)
