__all__ = ["Task"]

import logging
from abc import ABC, abstractmethod
from typing import Generic

import trio

from toolkit.exceptions import UnrecoverableError
from toolkit.more_typing import T_RECEIVABLE

LOGGER = logging.getLogger(__name__)


class Task(ABC, Generic[T_RECEIVABLE]):
    """One unit of work, executed by a loop once per received item."""

    async def execute_task(self, receivable: T_RECEIVABLE) -> None:
        """
        Run `execute` on one item. An UnrecoverableError ends the run; any other exception is logged and the loop
        moves on to its next item.
        """
        with trio.CancelScope() as cancel:
            try:
                await self.execute(receivable)
            except UnrecoverableError:
                cancel.cancel()
                raise
            except Exception:
                cancel.cancel()
                LOGGER.exception("%s failed on %r", type(self).__name__, receivable)

    @abstractmethod
    async def execute(self, receivable: T_RECEIVABLE) -> None:
        raise NotImplementedError()
