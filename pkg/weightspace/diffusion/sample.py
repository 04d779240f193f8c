__all__ = ["GENERATED_METRIC", "SAMPLE_STREAM", "ddim_sample", "decode_samples", "generated_dataset"]

import logging
from collections.abc import Sequence

import numpy as np
import torch
from numpy.typing import NDArray

from toolkit.exceptions import ShapeMismatchError
from weightspace.datastore import WeightDataset, WeightRecord
from weightspace.fitting import ParameterSpace
from weightspace.numerics import Rng, Tensor

from .schedule import ddim_step, ddim_timesteps
from .train import DiffusionModel

LOGGER = logging.getLogger(__name__)

SAMPLE_STREAM: int = 0x73616D70
GENERATED_METRIC: str = "none"


def ddim_sample(model: DiffusionModel, count: int, seed: int, *, steps: int | None = None) -> NDArray[np.float32]:
    """
    Deterministic DDIM (eta = 0) from unit noise drawn from Rng(seed, SAMPLE_STREAM), de-standardised. Frozen mask
    entries are not part of the vectors; `decode_samples` puts them back.
    """
    schedule = model.schedule
    timesteps = ddim_timesteps(schedule.timesteps, steps or model.config.ddim_steps)
    x = torch.from_numpy(Rng(seed, SAMPLE_STREAM).normal((count, model.record_length)))
    network = model.sampler()
    network.eval()
    with torch.no_grad():
        for t, t_prev in zip(timesteps, [*timesteps[1:], 0], strict=True):
            eps = network(x, torch.full((count,), t, dtype=torch.int64))
            x = ddim_step(x, eps, t, t_prev, schedule)
    LOGGER.info("Sampled %d representations in %d DDIM steps", count, len(timesteps))
    return model.standardizer.invert(x.numpy())


def decode_samples(space: ParameterSpace, vectors: NDArray[np.floating]) -> list[dict[str, Tensor]]:
    """Tensors of every sample with the frozen mask values re-inserted."""
    if vectors.ndim != 2 or vectors.shape[1] != space.trainable_count():
        raise ShapeMismatchError("decode_samples", vectors.shape, (-1, space.trainable_count()))
    return [space.unflatten(np.asarray(vector, dtype=np.float32)) for vector in vectors]


def generated_dataset(source: WeightDataset, vectors: Sequence[NDArray[np.floating]], *, seed: int) -> WeightDataset:
    """A weight dataset of sampled representations, flagged as generated."""
    records = [
        WeightRecord(instance_id=f"gen-{i:05d}", label=None, vector=np.asarray(v, dtype=np.float32), metric=0.0)
        for i, v in enumerate(vectors)
    ]
    return WeightDataset(
        arch=source.arch,
        arch_hash=source.arch_hash,
        parameterization=source.parameterization,
        record_length=source.record_length,
        metric_name=GENERATED_METRIC,
        records=records,
        base_hash=source.base_hash,
        mask=source.mask,
        settings=source.settings | {"generated": True, "sample_seed": seed},
    )
