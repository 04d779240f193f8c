"""
Order-preserving work pool. A producer feeds indexed jobs through a memory channel; `jobs` receive loops share the
channel and run the blocking work in worker threads; results are collected by index, so their order never depends on
completion order.
"""

__all__ = ["IndexedJob", "PoolWorkerTask", "run_indexed"]

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any, Generic, TypeVar

import trio

from framework.core.loops import ChannelReceiveLoop
from framework.core.tasks import Task
from toolkit.exceptions import UnrecoverableError, WeightspaceError

LOGGER = logging.getLogger(__name__)

T_PAYLOAD = TypeVar("T_PAYLOAD")
T_RESULT = TypeVar("T_RESULT")


@dataclass(frozen=True, kw_only=True)
class IndexedJob(Generic[T_PAYLOAD]):
    index: int
    payload: T_PAYLOAD


class PoolWorkerTask(Task[IndexedJob]):
    """Runs `work` on each received payload in a thread. Domain errors are stored as the job's result."""

    def __init__(
        self,
        work: Callable[[Any], Any],
        results: dict[int, Any],
        limiter: trio.CapacityLimiter,
    ) -> None:
        self.work = work
        self.results = results
        self.limiter = limiter

    async def execute(self, receivable: IndexedJob) -> None:
        try:
            self.results[receivable.index] = await trio.to_thread.run_sync(
                self.work, receivable.payload, limiter=self.limiter,
            )
        except UnrecoverableError:
            raise
        except WeightspaceError as e:
            LOGGER.warning("Job %d failed: %s", receivable.index, e)
            self.results[receivable.index] = e


async def run_indexed(
    work: Callable[[T_PAYLOAD], T_RESULT],
    payloads: Sequence[T_PAYLOAD],
    *,
    jobs: int = 1,
) -> list[T_RESULT | WeightspaceError]:
    """Apply `work` to every payload with at most `jobs` running at once; results follow the payload order."""
    if jobs < 1:
        raise UnrecoverableError(f"The work pool needs at least one worker, got {jobs}")
    results: dict[int, Any] = {}
    limiter = trio.CapacityLimiter(jobs)
    send_channel, receive_channel = trio.open_memory_channel[IndexedJob](0)
    async with trio.open_nursery() as nursery:
        async with receive_channel:
            for _ in range(min(jobs, max(len(payloads), 1))):
                worker = PoolWorkerTask(work, results, limiter)
                nursery.start_soon(ChannelReceiveLoop(inbound_channel=receive_channel.clone(), task=worker).run)
        async with send_channel:
            for index, payload in enumerate(payloads):
                await send_channel.send(IndexedJob(index=index, payload=payload))
    missing = [i for i in range(len(payloads)) if i not in results]
    if missing:
        raise UnrecoverableError(f"Jobs {missing} ended without a result; see the log for the traceback")
    return [results[i] for i in range(len(payloads))]
