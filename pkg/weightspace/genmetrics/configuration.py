__all__ = ["MetricsConfiguration"]

from pydantic import Field, PositiveInt
from pydantic_settings import SettingsConfigDict

from toolkit.configuration.setting_types import Seed
from toolkit.configuration.settings import SectionSettings
from weightspace.genmetrics.distances import MmdEstimator


class MetricsConfiguration(SectionSettings):
    model_config = SettingsConfigDict(env_prefix="WSF_METRICS_", extra="forbid")

    feature_dim: PositiveInt = 256
    extractor_seed: Seed = 0
    patch_size: PositiveInt = 4
    point_hidden: PositiveInt = 64
    estimator: MmdEstimator = MmdEstimator.UNBIASED
    block_size: PositiveInt = 256
    """Rows per block of the kernel sums."""
    reference_count: int = Field(default=0, ge=0)
    """Reference instances compared against; 0 uses the whole dataset."""
    surface_samples: PositiveInt = 2048
    mesh_resolution: int = Field(default=64, ge=4)
