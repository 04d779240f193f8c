__all__ = ["gen_data_command", "instance_modality", "load_instances"]

import logging

from weightspace.config import RunContext

from .configuration import DataConfiguration
from .store import read_instances, write_instances
from .toy import ImageInstance, Instance, Modality, gen_toy_images, gen_toy_sdfs

LOGGER = logging.getLogger(__name__)


async def gen_data_command(ctx: RunContext) -> dict:
    data: DataConfiguration = ctx.section("data")
    match data.modality:
        case Modality.IMAGE:
            instances: list[Instance] = list(gen_toy_images(data.image_spec(), data.count, ctx.seed))
        case Modality.SDF:
            instances = list(gen_toy_sdfs(data.sdf_spec(), data.count, ctx.seed))
    ctx.produce(*write_instances(ctx.layout.data_dir, instances))
    return ctx.finish(
        instances=len(instances),
        modality=str(data.modality),
        preset=str(data.preset),
        categories=list(data.resolved_categories()),
    )


def load_instances(ctx: RunContext) -> list[Instance]:
    """The run's toy dataset, after checking it against the `gen-data` manifest."""
    ctx.consume_all("gen-data")
    instances = read_instances(ctx.layout.data_dir)
    LOGGER.info("Loaded %d instances from %s", len(instances), ctx.layout.data_dir)
    return instances


def instance_modality(ctx: RunContext, instances: list[Instance]) -> tuple[Modality, int]:
    """Modality and output channels of a dataset; an empty one falls back to the data section."""
    if not instances:
        data: DataConfiguration = ctx.section("data")
        return data.modality, data.output_channels
    first = instances[0]
    return first.modality, first.shape[-1] if isinstance(first, ImageInstance) else 1
