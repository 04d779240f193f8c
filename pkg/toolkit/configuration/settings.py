__all__ = ["SectionSettings"]

from pydantic_settings import BaseSettings, PydanticBaseSettingsSource


class SectionSettings(BaseSettings):
    """
    One section of the run configuration. Environment variables take precedence over values passed to the
    constructor, which come from the configuration file and command-line overrides.
    """

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return env_settings, init_settings
