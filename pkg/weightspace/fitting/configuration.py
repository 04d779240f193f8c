__all__ = ["FittingConfiguration", "InitProtocol"]

from enum import StrEnum

from pydantic import PositiveFloat, PositiveInt
from pydantic_settings import SettingsConfigDict

from toolkit.configuration.setting_types import LearningRate
from toolkit.configuration.settings import SectionSettings
from weightspace.numerics import ScheduleKind

from .sampling import SamplingStrategy
from .spaces import DEFAULT_INIT_SCALE, Parameterization


class InitProtocol(StrEnum):
    FIRST_INSTANCE = "first-instance"
    """The first instance is fitted from the shared random init; its weights initialise every other fit."""
    SHARED_RANDOM = "shared-random"


class FittingConfiguration(SectionSettings):
    model_config = SettingsConfigDict(env_prefix="WSF_FIT_", extra="forbid")

    parameterizations: list[Parameterization] = list(Parameterization)
    steps: PositiveInt = 2000
    points: PositiveInt = 2048
    lr_start: LearningRate = 1e-2
    lr_end: LearningRate = 1e-5
    schedule: ScheduleKind = ScheduleKind.COSINE
    rank: PositiveInt = 12
    kappa: PositiveFloat = 6.0
    init_scale: PositiveFloat = DEFAULT_INIT_SCALE
    protocol: InitProtocol | None = None
    """Unset follows the dataset preset: first-instance for single-category MLP fits, shared-random otherwise."""
    strategy: SamplingStrategy | None = None
    log_every: PositiveInt = 50
    """Fit reports keep the mean loss of every window of this many steps."""
    metric_resolution: PositiveInt = 64
    metric_samples: PositiveInt = 2048
