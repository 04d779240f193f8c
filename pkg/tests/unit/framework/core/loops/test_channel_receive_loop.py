from unittest.mock import AsyncMock

import pytest
from trio import ClosedResourceError, EndOfChannel, open_memory_channel

from framework.core.loops.channel_receive_loop import ChannelReceiveLoop, _channel_receive_loop


@pytest.mark.unit()
async def test_items_arrive_in_send_order():
    send, receive = open_memory_channel[int](10)
    async with send, receive:
        items = _channel_receive_loop(receive)
        for value in (3, 1, 2):
            await send.send(value)
        assert [await anext(items) for _ in range(3)] == [3, 1, 2]
    with pytest.raises(ClosedResourceError):
        await anext(items)


@pytest.mark.unit()
async def test_loop_runs_task_until_the_channel_ends():
    task = AsyncMock()
    channel = AsyncMock()
    channel.receive.side_effect = [0, 1, EndOfChannel]

    await ChannelReceiveLoop(channel, task=task).run()

    assert [call.args for call in task.execute_task.await_args_list] == [(0,), (1,)]
    channel.__aenter__.assert_awaited_once()
    channel.__aexit__.assert_awaited_once()


@pytest.mark.unit()
async def test_loop_closes_its_receive_end():
    send, receive = open_memory_channel[int](2)
    task = AsyncMock()
    async with send:
        await send.send(7)
    await ChannelReceiveLoop(receive, task=task).run()
    task.execute_task.assert_awaited_once_with(7)
    with pytest.raises(ClosedResourceError):
        receive.receive_nowait()
