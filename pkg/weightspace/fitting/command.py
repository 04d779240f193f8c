__all__ = ["default_protocol", "fit_command", "load_base", "space_for"]

import json
import logging
from dataclasses import asdict

import numpy as np

from weightspace.config import RunContext
from weightspace.datastore import Instance, read_checkpoint, write_weightdataset
from weightspace.datastore.command import instance_modality, load_instances
from weightspace.datastore.configuration import DataConfiguration, DataPreset
from weightspace.nfcore import WeightSet
from weightspace.nfcore.configuration import ArchConfiguration

from .configuration import FittingConfiguration, InitProtocol
from .dataset import build_dataset
from .spaces import Parameterization, ParameterSpace, make_space

LOGGER = logging.getLogger(__name__)


def load_base(ctx: RunContext) -> WeightSet:
    """EMA weights of the run's base checkpoint."""
    path = ctx.consume(ctx.layout.base_checkpoint, "train-base")
    return read_checkpoint(path).ema


def space_for(ctx: RunContext, parameterization: Parameterization, instances: list[Instance]) -> ParameterSpace:
    fitting: FittingConfiguration = ctx.section("fitting")
    arch_config: ArchConfiguration = ctx.section("arch")
    base = load_base(ctx) if parameterization.is_lora else None
    return make_space(
        parameterization,
        standalone_arch=None if base is not None else arch_config.standalone(*instance_modality(ctx, instances)),
        base=base,
        rank=fitting.rank,
        kappa=fitting.kappa,
        mask_seed=ctx.seed,
        init_scale=fitting.init_scale,
    )


def default_protocol(
    parameterization: Parameterization,
    fitting: FittingConfiguration,
    data: DataConfiguration,
) -> InitProtocol:
    if fitting.protocol is not None:
        return fitting.protocol
    if data.preset is DataPreset.SINGLE and not parameterization.is_lora:
        return InitProtocol.FIRST_INSTANCE
    return InitProtocol.SHARED_RANDOM


async def fit_command(ctx: RunContext) -> dict:
    instances = load_instances(ctx)
    fitting: FittingConfiguration = ctx.section("fitting")
    data: DataConfiguration = ctx.section("data")
    summary = {}
    for parameterization in fitting.parameterizations:
        space = space_for(ctx, parameterization, instances)
        protocol = default_protocol(parameterization, fitting, data)
        build = await build_dataset(space, instances, fitting, seed=ctx.seed, protocol=protocol, jobs=ctx.jobs)

        path = ctx.layout.weights(parameterization.value)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_weightdataset(path, build.dataset)
        reports = ctx.layout.fit_reports(parameterization.value)
        reports.write_text(
            json.dumps({"reports": [asdict(r) for r in build.reports], "failures": build.failures}, indent=1) + "\n",
            encoding="utf-8",
        )
        ctx.produce(path, path.with_suffix(".csv"), reports)

        metrics = [r.metric for r in build.reports]
        summary[parameterization.value] = {
            "records": len(build.dataset),
            "failed": len(build.failures),
            "trainable": space.trainable_count(),
            build.dataset.metric_name: float(np.mean(metrics)) if metrics else None,
        }
        LOGGER.info("%s: %d records, %d failed", parameterization, len(build.dataset), len(build.failures))
    return ctx.finish(parameterizations=summary)
