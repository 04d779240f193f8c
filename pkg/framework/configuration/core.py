__all__ = ["CoreConfiguration", "DEFAULT_CONFIGURATION_FILE_PATHS"]

import os
from pathlib import Path
from typing import Literal

from pydantic import Field, PositiveInt
from pydantic_settings import SettingsConfigDict

from toolkit.configuration.setting_types import Seed
from toolkit.configuration.settings import SectionSettings

DEFAULT_CONFIGURATION_FILE_PATHS: tuple[Path, ...] = (Path("weightspace.json"), Path("weightspace.toml"))


class CoreConfiguration(SectionSettings):
    model_config = SettingsConfigDict(env_prefix="WSF_", extra="forbid")
    """Ensures all environment variables are read from WSF_<key-name>. Environment variables are case insensitive."""

    seed: Seed = 0
    output_dir: Path = Field(default=Path("runs/default"), exclude=True)
    jobs: PositiveInt | None = Field(default=None, exclude=True)
    """Unset uses every available CPU. Neither `jobs` nor `output_dir` is recorded in manifests; results do not depend
    on them."""
    torch_threads: PositiveInt = 1
    log_level: Literal["debug", "info", "warning", "error"] = "info"

    @property
    def workers(self) -> int:
        return self.jobs or os.cpu_count() or 1
