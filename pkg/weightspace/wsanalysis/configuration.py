__all__ = ["AnalysisConfiguration"]

from pydantic import Field, PositiveFloat, PositiveInt
from pydantic_settings import SettingsConfigDict

from toolkit.configuration.setting_types import UnitIntervalList, LearningRate
from toolkit.configuration.settings import SectionSettings
from weightspace.fitting import Parameterization


class AnalysisConfiguration(SectionSettings):
    model_config = SettingsConfigDict(env_prefix="WSF_ANALYSIS_", extra="forbid")

    lambdas: UnitIntervalList = Field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    trials: int = Field(default=10, ge=2)
    """Instances per (parameterization, lambda) point of the perturbation experiment."""
    parameterizations: list[Parameterization] = Field(
        default_factory=lambda: [Parameterization.MLP, Parameterization.MLORA, Parameterization.MLORA_ASYM],
    )
    barrier_resolution: PositiveInt = 64
    probe_runs: PositiveInt = 10
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    knn_k: PositiveInt = 1
    logistic_l2: PositiveFloat = 1e-3
    logistic_steps: PositiveInt = 2000
    logistic_lr: LearningRate = 0.1
    kmeans_restarts: PositiveInt = 10
    pca_dims: PositiveInt = 2
