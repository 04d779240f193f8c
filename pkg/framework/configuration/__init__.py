from .core import DEFAULT_CONFIGURATION_FILE_PATHS, CoreConfiguration

__all__ = ["CoreConfiguration", "DEFAULT_CONFIGURATION_FILE_PATHS"]
