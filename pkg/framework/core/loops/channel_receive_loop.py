__all__ = ["ChannelReceiveLoop"]

import logging
from collections.abc import AsyncGenerator
from typing import Generic

from trio import EndOfChannel, MemoryReceiveChannel

from framework.core.tasks import Task
from toolkit.more_typing import T_RECEIVABLE

from .loop import Loop

LOGGER = logging.getLogger(__name__)


async def _channel_receive_loop(channel: MemoryReceiveChannel[T_RECEIVABLE]) -> AsyncGenerator[T_RECEIVABLE, None]:
    try:
        while True:
            yield await channel.receive()
    except EndOfChannel:
        LOGGER.debug("Inbound channel drained")


class ChannelReceiveLoop(Loop[Task[T_RECEIVABLE]], Generic[T_RECEIVABLE]):
    """
    Drains a memory channel, executing the task once per received item, until every sender has closed. The loop owns
    its receive end and closes it on the way out.
    """

    def __init__(self, inbound_channel: MemoryReceiveChannel[T_RECEIVABLE], task: Task[T_RECEIVABLE]) -> None:
        super().__init__(task=task)
        self.inbound_channel = inbound_channel

    async def run(self) -> None:
        async with self.inbound_channel:
            async for receivable in _channel_receive_loop(self.inbound_channel):
                LOGGER.debug("Executing %s on %r", type(self.task).__name__, receivable)
                await self.task.execute_task(receivable)
        LOGGER.debug("%s finished", type(self.task).__name__)
