__all__ = [
    "DIFFUSION_STREAM",
    "DiffusionModel",
    "Standardizer",
    "build_denoiser",
    "diffusion_loss",
    "ema_modules",
    "train_diffusion",
]

import copy
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch
from numpy.typing import ArrayLike, NDArray

from toolkit.exceptions import DegenerateInputError, NonFiniteError, ShapeMismatchError
from toolkit.logging_tools import PROGRESS_LOGGER
from weightspace.datastore import WeightDataset
from weightspace.numerics import LrSchedule, Rng, Tensor, adam_step, backward, make_adam, mse

from .configuration import DiffusionConfiguration
from .denoiser import Denoiser, denoise_predict
from .schedule import NoiseSchedule, forward_diffuse
from .tokenizers import Tokenizer

LOGGER = logging.getLogger(__name__)
PROGRESS = logging.getLogger(PROGRESS_LOGGER)

DIFFUSION_STREAM: int = 0x64696666
STD_FLOOR: float = 1e-6


@dataclass(frozen=True, kw_only=True)
class Standardizer:
    """Per-dimension z-score of a weight dataset. Constant dimensions keep unit scale."""

    mean: NDArray[np.float32]
    std: NDArray[np.float32]

    @classmethod
    def fit(cls, matrix: ArrayLike) -> "Standardizer":
        data = np.asarray(matrix, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] == 0:
            raise DegenerateInputError("Standardisation needs at least one representation")
        std = data.std(axis=0)
        std[std < STD_FLOOR] = 1.0
        return cls(mean=data.mean(axis=0).astype(np.float32), std=std.astype(np.float32))

    def apply(self, matrix: ArrayLike) -> NDArray[np.float32]:
        return ((np.asarray(matrix, dtype=np.float32) - self.mean) / self.std).astype(np.float32)

    def invert(self, matrix: ArrayLike) -> NDArray[np.float32]:
        return (np.asarray(matrix, dtype=np.float32) * self.std + self.mean).astype(np.float32)


@dataclass(kw_only=True)
class DiffusionModel:
    config: DiffusionConfiguration
    tokenizer: Tokenizer
    denoiser: Denoiser
    standardizer: Standardizer
    dataset_hash: str
    parameterization: str
    ema: Denoiser | None = None
    losses: list[float] = field(default_factory=list)
    """Mean training loss of every epoch."""

    @property
    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule.linear(self.config.timesteps, self.config.beta_start, self.config.beta_end)

    @property
    def record_length(self) -> int:
        return self.tokenizer.length

    def sampler(self) -> Denoiser:
        """The EMA copy when one is kept."""
        return self.ema if self.ema is not None else self.denoiser


def build_denoiser(tokenizer: Tokenizer, config: DiffusionConfiguration, seed: int) -> Denoiser:
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        return Denoiser(tokenizer, d_model=config.token_dim, depth=config.depth, heads=config.heads)


def diffusion_loss(denoiser: Denoiser, schedule: NoiseSchedule, x0: Tensor, t: Tensor, eps: Tensor) -> Tensor:
    """Mean squared error between the drawn noise and its prediction from the diffused input."""
    return mse(denoise_predict(denoiser, forward_diffuse(x0, t, eps, schedule), t), eps)


def ema_modules(ema: torch.nn.Module, model: torch.nn.Module, decay: float) -> None:
    with torch.no_grad():
        for shadow, param in zip(ema.parameters(), model.parameters(), strict=True):
            shadow.mul_(decay).add_(param.detach(), alpha=1.0 - decay)


def train_diffusion(
    dataset: WeightDataset,
    tokenizer: Tokenizer,
    config: DiffusionConfiguration,
    *,
    seed: int,
    dataset_hash: str = "",
) -> DiffusionModel:
    """
    Fit the noise predictor on the standardised dataset with uniformly drawn timesteps. Batches, timesteps and noise
    all come from Rng(seed, DIFFUSION_STREAM). A dataset smaller than one batch is repeated to fill it, so every step
    sees `batch_size` noise draws.
    """
    if len(dataset) == 0:
        raise DegenerateInputError("Diffusion training needs a nonempty weight dataset")
    if tokenizer.length != dataset.record_length:
        raise ShapeMismatchError("train_diffusion", (dataset.record_length,), (tokenizer.length,))
    matrix = dataset.matrix()
    standardizer = Standardizer.fit(matrix)
    data = torch.from_numpy(standardizer.apply(matrix))
    count, length = data.shape

    rng = Rng(seed, DIFFUSION_STREAM)
    schedule = NoiseSchedule.linear(config.timesteps, config.beta_start, config.beta_end)
    denoiser = build_denoiser(tokenizer, config, rng.torch_seed())
    ema = copy.deepcopy(denoiser) if config.ema_decay > 0 else None
    batch_size = config.batch_size
    epoch_size = max(count, batch_size)
    steps_per_epoch = math.ceil(epoch_size / batch_size)
    lr = LrSchedule(
        kind=config.schedule, start=config.lr_start, end=config.lr_end, total_steps=config.epochs * steps_per_epoch,
    )
    params = list(denoiser.parameters())
    state = make_adam(params, lr)
    LOGGER.info(
        "Training the %s denoiser on %d representations of length %d for %d epochs",
        tokenizer.kind,
        count,
        length,
        config.epochs,
    )

    losses: list[float] = []
    denoiser.train()
    for epoch in range(config.epochs):
        order = np.resize(rng.permutation(count), epoch_size)
        epoch_losses = []
        for start in range(0, epoch_size, batch_size):
            batch = torch.from_numpy(order[start : start + batch_size])
            size = int(batch.shape[0])
            t = torch.from_numpy(rng.integers(config.timesteps, size) + 1)
            eps = torch.from_numpy(rng.normal((size, length)))
            loss = diffusion_loss(denoiser, schedule, data[batch], t, eps)
            if not torch.isfinite(loss):
                raise NonFiniteError(f"Non-finite diffusion loss at epoch {epoch}, step {state.step}")
            adam_step(state, params, backward(loss, params))
            if ema is not None:
                ema_modules(ema, denoiser, config.ema_decay)
            epoch_losses.append(float(loss))
        losses.append(float(np.mean(epoch_losses)))
        if (config.log_every and (epoch + 1) % config.log_every == 0) or epoch == config.epochs - 1:
            PROGRESS.debug("diffusion epoch %d lr %.3g loss %.6g", epoch + 1, state.lr, losses[-1])
    denoiser.eval()
    LOGGER.info("Diffusion training done: loss %.4g -> %.4g", losses[0], losses[-1])
    return DiffusionModel(
        config=config,
        tokenizer=tokenizer,
        denoiser=denoiser,
        standardizer=standardizer,
        dataset_hash=dataset_hash,
        parameterization=dataset.parameterization,
        ema=ema,
        losses=losses,
    )
