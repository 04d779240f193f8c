"""
Autodecoder training of the modulated base field: the network weights and one latent code per instance are optimised
jointly against the reconstruction loss plus an L2 prior on the codes. An exponential moving average of the weights
is kept every step and is what downstream stages adapt.
"""

__all__ = [
    "BASE_STREAM",
    "AutodecoderState",
    "autodecode_loss",
    "autodecode_step",
    "ema_update",
    "ema_warmup_decay",
    "sample_batch",
    "total_steps",
    "train_base",
]

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import torch

from toolkit.exceptions import ConfigurationError, DegenerateInputError, NonFiniteError, ShapeMismatchError
from toolkit.logging_tools import PROGRESS_LOGGER
from weightspace.datastore import BaseCheckpoint, Instance
from weightspace.fitting.sampling import instance_targets, sample_coords
from weightspace.nfcore import FieldArch, FieldKind, WeightSet, base_forward
from weightspace.numerics import (
    AdamState,
    LrSchedule,
    Rng,
    Tensor,
    adam_step,
    backward,
    make_adam,
    make_sparse_adam,
    mse,
    sparse_adam_step,
)

from .configuration import BaseTrainingConfiguration
from .schedule import progressive_schedule, validate_stages

LOGGER = logging.getLogger(__name__)
PROGRESS = logging.getLogger(PROGRESS_LOGGER)

BASE_STREAM: int = 0x62617365


@dataclass(kw_only=True)
class AutodecoderState:
    """Single owner: one training task mutates weights, latents, EMA and optimizer state in place."""

    arch: FieldArch
    weights: WeightSet
    latents: Tensor
    """(N, d_z) leaf tensor."""
    ema: WeightSet
    optimizer: AdamState
    latent_optimizer: AdamState
    """Row-sparse: only codes in the current batch move."""
    lambda_r: float
    ema_decay: float

    def __post_init__(self) -> None:
        if self.lambda_r < 0:
            raise ConfigurationError(f"lambda_r must be non-negative, got {self.lambda_r}")
        if not 0.0 <= self.ema_decay < 1.0:
            raise ConfigurationError(f"EMA decay must lie in [0, 1), got {self.ema_decay}")
        if self.latents.ndim != 2 or self.latents.shape[1] != self.arch.latent_dim:
            raise ShapeMismatchError("latents", self.latents.shape, (-1, self.arch.latent_dim))

    @property
    def step(self) -> int:
        return self.optimizer.step

    def ema_decay_at(self, step: int) -> float:
        return ema_warmup_decay(self.ema_decay, step)

    @classmethod
    def initialize(
        cls,
        arch: FieldArch,
        count: int,
        config: BaseTrainingConfiguration,
        rng: Rng,
        schedule: LrSchedule,
    ) -> "AutodecoderState":
        if arch.kind is not FieldKind.MODULATED:
            raise ConfigurationError("The autodecoder trains a modulated base field")
        weights = WeightSet.initialize(arch, rng).requires_grad_(True)
        latents = rng.torch_normal((count, arch.latent_dim), std=config.latent_std).requires_grad_(True)
        return cls(
            arch=arch,
            weights=weights,
            latents=latents,
            ema=weights.detached(),
            optimizer=make_adam(weights.parameters(), schedule),
            latent_optimizer=make_sparse_adam(latents, schedule),
            lambda_r=config.lambda_r,
            ema_decay=config.ema_decay,
        )


def ema_update(ema: WeightSet, weights: WeightSet, decay: float) -> WeightSet:
    """ema <- decay * ema + (1 - decay) * weights, elementwise and in place."""
    with torch.no_grad():
        for key in ema:
            ema[key].mul_(decay).add_(weights[key].detach(), alpha=1.0 - decay)
    return ema


def ema_warmup_decay(decay: float, step: int) -> float:
    """Decay in effect after `step` updates, capped by (1 + step) / (10 + step) so the first updates mostly copy."""
    return min(decay, (1.0 + step) / (10.0 + step))


def autodecode_loss(state: AutodecoderState, indices: Tensor, coords: Tensor, targets: Tensor) -> Tensor:
    """Reconstruction MSE of the batch plus lambda_r times the mean squared norm of its latent codes."""
    z = state.latents[indices]
    prediction = base_forward(state.arch, state.weights, coords, z=z)
    return mse(prediction, targets) + state.lambda_r * torch.sum(z * z) / z.shape[0]


def autodecode_step(state: AutodecoderState, indices: Tensor, coords: Tensor, targets: Tensor, *, stage: int = 0) -> float:
    loss = autodecode_loss(state, indices, coords, targets)
    if not torch.isfinite(loss):
        raise NonFiniteError(f"Non-finite base training loss at stage {stage}, step {state.step}")
    step = state.step
    weights = state.weights.parameters()
    *grads, latent_grad = backward(loss, [*weights, state.latents])
    adam_step(state.optimizer, weights, grads)
    sparse_adam_step(state.latent_optimizer, state.latents, latent_grad, indices)
    ema_update(state.ema, state.weights, state.ema_decay_at(step))
    return float(loss)


def sample_batch(
    instances: Sequence[Instance],
    indices: np.ndarray,
    points: int,
    rng: Rng,
    output_dim: int,
) -> tuple[Tensor, Tensor]:
    coords, targets = [], []
    for index in indices:
        batch = sample_coords(instances[int(index)], points, rng)
        values = instance_targets(instances[int(index)], batch)
        if values.shape[1] != output_dim:
            raise ShapeMismatchError("base targets", values.shape, (points, output_dim))
        coords.append(batch.points)
        targets.append(values)
    return torch.from_numpy(np.stack(coords)), torch.from_numpy(np.stack(targets))


def total_steps(config: BaseTrainingConfiguration) -> int:
    return sum(stage.steps for stage in config.stages)


def train_base(
    arch: FieldArch,
    instances: Sequence[Instance],
    config: BaseTrainingConfiguration,
    *,
    seed: int,
) -> BaseCheckpoint:
    if not instances:
        raise DegenerateInputError("Base training needs at least one instance")
    validate_stages(config.stages)
    schedule = LrSchedule(
        kind=config.schedule,
        start=config.lr_start,
        end=config.lr_end,
        total_steps=total_steps(config),
        stages=config.lr_stages,
    )
    rng = Rng(seed, BASE_STREAM)
    state = AutodecoderState.initialize(arch, len(instances), config, rng, schedule)
    LOGGER.info(
        "Training the base field on %d instances over %d stages (%d steps)",
        len(instances),
        len(config.stages),
        schedule.total_steps,
    )
    window: list[float] = []
    window_losses: list[float] = []
    loss = float("nan")
    current_stage = -1
    for entry in progressive_schedule(config.stages, schedule):
        if entry.stage != current_stage:
            current_stage = entry.stage
            LOGGER.info("Stage %d: batch %d, %d points per instance", entry.stage, entry.batch_size, entry.points)
        count = min(entry.batch_size, len(instances))
        indices = rng.choice_without_replacement(len(instances), count)
        coords, targets = sample_batch(instances, indices, entry.points, rng, arch.output_dim)
        loss = autodecode_step(state, torch.from_numpy(indices), coords, targets, stage=entry.stage)
        window.append(loss)
        if len(window) == config.log_every:
            window_losses.append(float(np.mean(window)))
            PROGRESS.debug("base stage %d step %d lr %.3g loss %.6g", entry.stage, entry.step + 1, entry.lr, window_losses[-1])
            window.clear()

    return BaseCheckpoint(
        arch=arch,
        weights=state.weights.detached(),
        ema=state.ema.detached(),
        latents=state.latents.detach().numpy().astype(np.float32),
        instance_ids=[instance.id for instance in instances],
        metadata={
            "steps": state.step,
            "final_loss": loss,
            "window_losses": window_losses,
            "lambda_r": config.lambda_r,
            "ema_decay": config.ema_decay,
            "stages": [stage.model_dump() for stage in config.stages],
        },
    )
