__all__ = ["DiffusionConfiguration", "TokenizerKind"]

from enum import StrEnum
from typing import Self

from pydantic import Field, NonNegativeInt, PositiveInt, model_validator
from pydantic_settings import SettingsConfigDict

from toolkit.configuration.setting_types import LearningRate
from toolkit.configuration.settings import SectionSettings
from weightspace.fitting import Parameterization
from weightspace.numerics import ScheduleKind


class TokenizerKind(StrEnum):
    FLAT_CHUNKS = "flat-chunks"
    LORA_HIERARCHICAL = "lora-hierarchical"
    PER_MATRIX = "per-matrix"


class DiffusionConfiguration(SectionSettings):
    model_config = SettingsConfigDict(env_prefix="WSF_DIFFUSION_", extra="forbid")

    parameterizations: list[Parameterization] = Field(default_factory=lambda: [Parameterization.MLORA_ASYM])
    """Weight datasets a denoiser is trained on, one model each."""
    timesteps: int = Field(default=500, ge=2)
    beta_start: float = Field(default=1e-4, gt=0.0, lt=1.0)
    beta_end: float = Field(default=2e-2, gt=0.0, lt=1.0)
    tokenizer: TokenizerKind | None = None
    """Unset picks lora-hierarchical for LoRA datasets and flat-chunks otherwise."""
    chunk_size: PositiveInt = 64
    token_dim: PositiveInt = 256
    depth: PositiveInt = 4
    heads: PositiveInt = 8
    batch_size: PositiveInt = 256
    epochs: PositiveInt = 200
    lr_start: LearningRate = 2e-4
    lr_end: LearningRate = 2e-4
    schedule: ScheduleKind = ScheduleKind.CONSTANT
    ema_decay: float = Field(default=0.0, ge=0.0, lt=1.0)
    """0 disables the EMA copy of the denoiser."""
    ddim_steps: PositiveInt = 100
    samples: PositiveInt = 64
    log_every: NonNegativeInt = 10
    """Epochs between progress records; 0 logs only the final epoch."""

    @model_validator(mode="after")
    def check_consistency(self) -> Self:
        if self.beta_start >= self.beta_end:
            raise ValueError(f"beta_start {self.beta_start} must be below beta_end {self.beta_end}")
        if self.ddim_steps > self.timesteps:
            raise ValueError(f"ddim_steps {self.ddim_steps} exceeds the {self.timesteps} diffusion timesteps")
        if self.token_dim % self.heads:
            raise ValueError(f"token_dim {self.token_dim} is not divisible by {self.heads} heads")
        if self.lr_end > self.lr_start:
            raise ValueError("lr_end must not exceed lr_start")
        return self
