"""
Bounded worker pool for per-query pipeline runs.

Queries are independent, so each one runs in a thread under a semaphore; results
come back in input order whatever order the threads finish in.
"""
import asyncio
from typing import Callable, Sequence, TypeVar

import structlog

logger = structlog.get_logger()

Item = TypeVar("Item")
Result = TypeVar("Result")


class WorkerPool:
    """Runs a blocking function over items with at most `concurrency` in flight."""

    def __init__(self, concurrency: int = 1):
        if concurrency < 1:
            raise ValueError("concurrency must be at least 1")
        self.concurrency = concurrency
        self._semaphore: asyncio.Semaphore | None = None

    async def _run_one(self, func: Callable[[Item], Result], item: Item) -> Result:
        async with self._semaphore:
            return await asyncio.to_thread(func, item)

    async def run(self, func: Callable[[Item], Result], items: Sequence[Item]) -> list[Result]:
        """
        Apply `func` to every item.

        The first exception raised by any job is re-raised after the remaining
        jobs are cancelled.
        """
        self._semaphore = asyncio.Semaphore(self.concurrency)
        logger.debug("Worker pool started", jobs=len(items), concurrency=self.concurrency)
        tasks = [asyncio.create_task(self._run_one(func, item)) for item in items]
        try:
            return list(await asyncio.gather(*tasks))
        except BaseException:
            for task in tasks:
                task.cancel()
            raise


def run_in_order(func: Callable[[Item], Result], items: Sequence[Item], concurrency: int = 1) -> list[Result]:
    """Synchronous entry point: results[k] = func(items[k])."""
    if concurrency == 1:
        return [func(item) for item in items]
    return asyncio.run(WorkerPool(concurrency).run(func, items))
