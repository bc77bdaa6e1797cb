"""Worker pool: independent Monte Carlo work items on a bounded set of threads.

Items are queued with their index and results are stored by index, so the output
does not depend on which worker finished first.
"""

from __future__ import annotations

import asyncio
import functools
import logging
import time
import traceback
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Generic, TypeVar

import anyio
from anyio import CapacityLimiter
from anyio.to_thread import run_sync

from landscape.telemetry import queue_depth, trial_duration, trial_failures, trials_completed

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(slots=True)
class PoolState(Generic[R]):
    results: list[R | None]
    processed_ok: int = 0
    processed_err: int = 0
    failed: list[int] = field(default_factory=list)
    last_error: str | None = None


async def worker(
    worker_id: int,
    queue: asyncio.Queue[tuple[int, T]],
    job: Callable[[T], R],
    state: PoolState[R],
    limiter: CapacityLimiter,
) -> None:
    """Consume (index, item) pairs and run `job` on a worker thread."""
    while True:
        index, item = await queue.get()
        start = time.monotonic()
        try:
            state.results[index] = await run_sync(
                functools.partial(job, item), limiter=limiter, abandon_on_cancel=True
            )
            state.processed_ok += 1
            trials_completed.add(1)
        except Exception:
            state.processed_err += 1
            state.failed.append(index)
            state.last_error = f"item {index}: {traceback.format_exc()}"
            trial_failures.add(1)
            logger.exception(
                "Worker %d: item %d failed", worker_id, index, extra={"trial": index}
            )
        finally:
            trial_duration.record(time.monotonic() - start)
            queue.task_done()
            queue_depth.add(-1)


async def run_pool(job: Callable[[T], R], items: Sequence[T], threads: int) -> PoolState[R]:
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    state: PoolState[R] = PoolState(results=[None] * len(items))
    queue: asyncio.Queue[tuple[int, T]] = asyncio.Queue()
    for index, item in enumerate(items):
        queue.put_nowait((index, item))
        queue_depth.add(1)

    limiter = CapacityLimiter(threads)
    tasks = [
        asyncio.create_task(worker(i, queue, job, state, limiter))
        for i in range(min(threads, max(len(items), 1)))
    ]
    await queue.join()
    for t in tasks:
        t.cancel()
    await asyncio.gather(*tasks, return_exceptions=True)

    state.failed.sort()
    logger.debug(
        "Pool drained: %d ok, %d failed",
        state.processed_ok,
        state.processed_err,
        extra={"count": len(items)},
    )
    return state


def run_parallel(job: Callable[[T], R], items: Sequence[T], threads: int) -> PoolState[R]:
    """Synchronous entry point: drive the pool on a fresh event loop."""
    return anyio.run(run_pool, job, items, threads)
