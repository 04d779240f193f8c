__all__ = ["METRIC_COLUMNS", "REFERENCE_STREAM", "metrics_command", "reference_samples"]

import json
import logging
from functools import partial
from pathlib import Path

import numpy as np
import trio
from numpy.typing import NDArray

from toolkit.exceptions import DegenerateInputError
from weightspace.config import RunContext
from weightspace.datastore import ImageInstance, Instance, Modality, SdfInstance, read_netpbm
from weightspace.datastore.command import load_instances
from weightspace.diffusion import DiffusionConfiguration
from weightspace.fitting import surface_cloud
from weightspace.geometry import read_points_csv
from weightspace.numerics import Rng
from weightspace.report import write_table

from .configuration import MetricsConfiguration
from .evaluate import generation_metrics

LOGGER = logging.getLogger(__name__)

REFERENCE_STREAM: int = 0x72656673
METRIC_COLUMNS = (
    "parameterization",
    "modality",
    "generated",
    "reference",
    "extractor",
    "extractor_seed",
    "fd",
    "mmd_g",
    "mmd_p",
    "mmd",
    "cov",
    "1nna",
)
IMAGE_SUFFIXES = (".pgm", ".ppm")


def reference_samples(
    instances: list[Instance],
    config: MetricsConfiguration,
    seed: int,
) -> tuple[Modality, list[NDArray[np.floating]]]:
    """
    Raw reference samples: pixel rasters for images, surface point clouds for SDFs. With `reference_count` set, a
    fixed random subset of the instances is used.
    """
    if not instances:
        raise DegenerateInputError("Generation metrics need a nonempty reference dataset")
    chosen = instances
    if 0 < config.reference_count < len(instances):
        index = np.sort(Rng(seed, REFERENCE_STREAM).choice_without_replacement(len(instances), config.reference_count))
        chosen = [instances[i] for i in index]
    modality = chosen[0].modality
    if modality is Modality.IMAGE:
        return modality, [instance.pixels for instance in chosen if isinstance(instance, ImageInstance)]
    clouds = []
    shapes = [instance for instance in chosen if isinstance(instance, SdfInstance)]
    for i, instance in enumerate(shapes):
        cloud = surface_cloud(
            instance.values,
            Rng(seed, REFERENCE_STREAM + 1 + i),
            resolution=config.mesh_resolution,
            samples=config.surface_samples,
        )
        if cloud is None:
            LOGGER.warning("Reference shape '%s' has no zero level set; skipped", instance.id)
            continue
        clouds.append(cloud)
    return modality, clouds


def _generated_samples(paths: list[Path], modality: Modality) -> list[NDArray[np.floating]]:
    if modality is Modality.IMAGE:
        return [read_netpbm(p) for p in sorted(paths) if p.suffix in IMAGE_SUFFIXES]
    return [read_points_csv(p) for p in sorted(paths) if p.suffix == ".csv" and p.parent.name == "clouds"]


async def metrics_command(ctx: RunContext) -> dict:
    config: MetricsConfiguration = ctx.section("metrics")
    diffusion: DiffusionConfiguration = ctx.section("diffusion")
    instances = load_instances(ctx)
    modality, reference = await trio.to_thread.run_sync(partial(reference_samples, instances, config, ctx.seed))

    rows = []
    summary = {}
    for parameterization in diffusion.parameterizations:
        generated = _generated_samples(
            ctx.consume_under(ctx.layout.samples_dir(parameterization.value), "sample"),
            modality,
        )
        LOGGER.info("Scoring %d generated %s samples of %s", len(generated), modality, parameterization)
        report = await trio.to_thread.run_sync(partial(generation_metrics, generated, reference, modality, config))

        path = ctx.layout.metrics(parameterization.value)
        path.parent.mkdir(parents=True, exist_ok=True)
        document = {"parameterization": parameterization.value} | report.document()
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        ctx.produce(path)
        rows.append({"parameterization": parameterization.value} | report.row())
        summary[parameterization.value] = {
            "fd": report.fd,
            "mmd_g": report.mmd_gaussian,
            "mmd_p": report.mmd_polynomial,
        }

    ctx.produce(write_table(ctx.layout.root / "metrics" / "metrics.csv", METRIC_COLUMNS, rows))
    return ctx.finish(parameterizations=summary)
