__all__ = ["DataConfiguration", "DataPreset"]

from enum import StrEnum
from typing import Literal, Self

from pydantic import PositiveInt, model_validator
from pydantic_settings import SettingsConfigDict

from toolkit.configuration.settings import SectionSettings

from .toy import IMAGE_CATEGORIES, SDF_CATEGORIES, Modality, ToyImageSpec, ToySdfSpec


class DataPreset(StrEnum):
    SINGLE = "single"
    """One category; MLP fits use the first-instance initialisation."""
    MULTI = "multi"


class DataConfiguration(SectionSettings):
    model_config = SettingsConfigDict(env_prefix="WSF_DATA_", extra="forbid")

    modality: Modality = Modality.IMAGE
    preset: DataPreset = DataPreset.MULTI
    count: PositiveInt = 100
    resolution: PositiveInt = 64
    channels: Literal[1, 3] = 3
    categories: tuple[str, ...] | None = None
    """Unset takes the first category for `single` and every category for `multi`."""

    @model_validator(mode="after")
    def check_categories(self) -> Self:
        known = IMAGE_CATEGORIES if self.modality is Modality.IMAGE else SDF_CATEGORIES
        unknown = set(self.categories or ()) - set(known)
        if unknown:
            raise ValueError(f"Unknown {self.modality} categories {sorted(unknown)}; choose from {list(known)}")
        return self

    def resolved_categories(self) -> tuple[str, ...]:
        if self.categories:
            return self.categories
        known = IMAGE_CATEGORIES if self.modality is Modality.IMAGE else SDF_CATEGORIES
        return known[:1] if self.preset is DataPreset.SINGLE else known

    def image_spec(self) -> ToyImageSpec:
        return ToyImageSpec(resolution=self.resolution, channels=self.channels, categories=self.resolved_categories())

    def sdf_spec(self) -> ToySdfSpec:
        return ToySdfSpec(categories=self.resolved_categories())

    @property
    def output_channels(self) -> int:
        return self.channels if self.modality is Modality.IMAGE else 1
