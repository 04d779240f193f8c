__all__ = ["train_base_command"]

import logging
from functools import partial

import trio

from weightspace.config import RunContext
from weightspace.datastore import write_checkpoint
from weightspace.datastore.command import instance_modality, load_instances
from weightspace.nfcore.configuration import ArchConfiguration

from .autodecoder import train_base
from .configuration import BaseTrainingConfiguration

LOGGER = logging.getLogger(__name__)


async def train_base_command(ctx: RunContext) -> dict:
    instances = load_instances(ctx)
    arch_config: ArchConfiguration = ctx.section("arch")
    config: BaseTrainingConfiguration = ctx.section("base")
    arch = arch_config.modulated(*instance_modality(ctx, instances))

    checkpoint = await trio.to_thread.run_sync(partial(train_base, arch, instances, config, seed=ctx.seed))
    path = ctx.layout.base_checkpoint
    path.parent.mkdir(parents=True, exist_ok=True)
    write_checkpoint(path, checkpoint)
    ctx.produce(path)
    return ctx.finish(
        base_hash=checkpoint.base_hash,
        steps=checkpoint.metadata["steps"],
        final_loss=checkpoint.metadata["final_loss"],
    )
