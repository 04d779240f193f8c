__all__ = ["BaseTrainingConfiguration", "StageConfig"]

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt
from pydantic_settings import SettingsConfigDict

from toolkit.configuration.setting_types import LearningRate
from toolkit.configuration.settings import SectionSettings
from weightspace.numerics import ScheduleKind


class StageConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    batch_size: PositiveInt
    points: PositiveInt
    steps: PositiveInt


def _default_stages() -> list[StageConfig]:
    return [
        StageConfig(batch_size=64, points=256, steps=1000),
        StageConfig(batch_size=16, points=1024, steps=1000),
        StageConfig(batch_size=8, points=4096, steps=1000),
    ]


class BaseTrainingConfiguration(SectionSettings):
    model_config = SettingsConfigDict(env_prefix="WSF_BASE_", extra="forbid")

    stages: list[StageConfig] = Field(default_factory=_default_stages)
    lambda_r: NonNegativeFloat = 1e-4
    latent_std: PositiveFloat = 0.1
    """Latent codes start at N(0, latent_std^2 I)."""
    ema_decay: float = Field(default=0.999, ge=0.0, lt=1.0)
    lr_start: LearningRate = 1e-3
    lr_end: LearningRate = 1e-5
    schedule: ScheduleKind = ScheduleKind.STAGED
    lr_stages: PositiveInt = 5
    log_every: PositiveInt = 50
