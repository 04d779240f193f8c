__all__ = ["GENERATED_FILE", "Source", "load_source", "sample_command", "train_diff_command"]

import logging
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np
import torch
import trio

from toolkit.exceptions import HashMismatchError
from weightspace.config import RunContext
from weightspace.datastore import (
    DataConfiguration,
    Modality,
    WeightDataset,
    file_sha256,
    pixel_centers,
    read_weightdataset,
    write_netpbm,
    write_weightdataset,
)
from weightspace.fitting import ParameterSpace, Parameterization, field_function, space_from_dataset, surface_cloud
from weightspace.fitting.command import load_base
from weightspace.genmetrics import MetricsConfiguration
from weightspace.geometry import marching_cubes, sample_field_to_grid, write_obj, write_points_csv
from weightspace.numerics import Rng, Tensor

from .checkpoint import read_denoiser, write_denoiser
from .configuration import DiffusionConfiguration
from .sample import SAMPLE_STREAM, ddim_sample, decode_samples, generated_dataset
from .tokenizers import Tokenizer, build_tokenizer
from .train import train_diffusion

LOGGER = logging.getLogger(__name__)

GENERATED_FILE = "generated.wsd"


@dataclass(frozen=True, kw_only=True)
class Source:
    """A fitted weight dataset with the space and tokenizer it is denoised in."""

    path: Path
    dataset: WeightDataset
    space: ParameterSpace
    tokenizer: Tokenizer

    @property
    def modality(self) -> Modality:
        return Modality.IMAGE if self.space.arch.input_dim == 2 else Modality.SDF


def load_source(ctx: RunContext, parameterization: Parameterization) -> Source:
    config: DiffusionConfiguration = ctx.section("diffusion")
    path = ctx.consume(ctx.layout.weights(parameterization.value), "fit")
    dataset = read_weightdataset(path)
    space = space_from_dataset(dataset, load_base(ctx) if parameterization.is_lora else None)
    tokenizer = build_tokenizer(config.tokenizer, space, chunk_size=config.chunk_size)
    return Source(path=path, dataset=dataset, space=space, tokenizer=tokenizer)


async def train_diff_command(ctx: RunContext) -> dict:
    config: DiffusionConfiguration = ctx.section("diffusion")
    summary = {}
    for parameterization in config.parameterizations:
        source = load_source(ctx, parameterization)
        model = await trio.to_thread.run_sync(
            partial(
                train_diffusion,
                source.dataset,
                source.tokenizer,
                config,
                seed=ctx.seed,
                dataset_hash=file_sha256(source.path),
            ),
        )
        path = ctx.layout.denoiser(parameterization.value)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_denoiser(path, model)
        ctx.produce(path)
        summary[parameterization.value] = {
            "records": len(source.dataset),
            "tokenizer": str(source.tokenizer.kind),
            "final_loss": model.losses[-1],
        }
    return ctx.finish(parameterizations=summary)


def _render_images(
    space: ParameterSpace,
    samples: list[dict[str, Tensor]],
    out_dir: Path,
    resolution: int,
) -> list[Path]:
    points = torch.from_numpy(pixel_centers(resolution, resolution))
    paths = []
    for i, tensors in enumerate(samples):
        with torch.no_grad():
            pixels = space.forward(tensors, points).double().numpy()
        image = pixels.reshape(resolution, resolution, -1)
        suffix = "pgm" if image.shape[-1] == 1 else "ppm"
        paths.append(write_netpbm(out_dir / "images" / f"gen-{i:05d}.{suffix}", image, comment=f"gen-{i:05d}"))
    return paths


def _mesh_shapes(
    space: ParameterSpace,
    samples: list[dict[str, Tensor]],
    out_dir: Path,
    metrics: MetricsConfiguration,
    seed: int,
) -> tuple[list[Path], int]:
    paths = []
    empty = 0
    for i, tensors in enumerate(samples):
        field = field_function(space, tensors)
        mesh = marching_cubes(sample_field_to_grid(field, metrics.mesh_resolution))
        paths.append(write_obj(mesh, out_dir / "meshes" / f"gen-{i:05d}.obj"))
        cloud = surface_cloud(
            field,
            Rng(seed, SAMPLE_STREAM + 1 + i),
            resolution=metrics.mesh_resolution,
            samples=metrics.surface_samples,
        )
        if cloud is None:
            LOGGER.warning("Generated shape gen-%05d has no zero level set; no point cloud written", i)
            empty += 1
            continue
        paths.append(write_points_csv(cloud, out_dir / "clouds" / f"gen-{i:05d}.csv"))
    return paths, empty


def _decode(
    ctx: RunContext,
    source: Source,
    vectors: np.ndarray,
    out_dir: Path,
) -> tuple[list[Path], int]:
    samples = decode_samples(source.space, vectors)
    if source.modality is Modality.IMAGE:
        data: DataConfiguration = ctx.section("data")
        return _render_images(source.space, samples, out_dir, data.resolution), 0
    return _mesh_shapes(source.space, samples, out_dir, ctx.section("metrics"), ctx.seed)


async def sample_command(ctx: RunContext) -> dict:
    config: DiffusionConfiguration = ctx.section("diffusion")
    summary = {}
    for parameterization in config.parameterizations:
        source = load_source(ctx, parameterization)
        path = ctx.consume(ctx.layout.denoiser(parameterization.value), "train-diff")
        model = read_denoiser(path, source.tokenizer)
        dataset_hash = file_sha256(source.path)
        if model.dataset_hash != dataset_hash:
            raise HashMismatchError(source.path, model.dataset_hash, dataset_hash)

        vectors = await trio.to_thread.run_sync(partial(ddim_sample, model, config.samples, ctx.seed))
        out_dir = ctx.layout.samples_dir(parameterization.value)
        out_dir.mkdir(parents=True, exist_ok=True)
        generated = generated_dataset(source.dataset, list(vectors), seed=ctx.seed)
        write_weightdataset(out_dir / GENERATED_FILE, generated)
        ctx.produce(out_dir / GENERATED_FILE, (out_dir / GENERATED_FILE).with_suffix(".csv"))

        decoded, empty = await trio.to_thread.run_sync(partial(_decode, ctx, source, vectors, out_dir))
        ctx.produce(*decoded)
        summary[parameterization.value] = {
            "samples": len(generated),
            "modality": str(source.modality),
            "empty_meshes": empty,
        }
    return ctx.finish(parameterizations=summary)
