import logging
from typing import Any, Literal, TypedDict, TypeVar, cast

from pydantic import ValidationError

from framework.configuration.core import DEFAULT_CONFIGURATION_FILE_PATHS, CoreConfiguration
from toolkit.configuration.sources import read_configuration_file
from toolkit.exceptions import ConfigurationError
from toolkit.logging_tools import parse_validation_error
from weightspace.basemodel.configuration import BaseTrainingConfiguration
from weightspace.datastore.configuration import DataConfiguration
from weightspace.diffusion.configuration import DiffusionConfiguration
from weightspace.fitting.configuration import FittingConfiguration
from weightspace.genmetrics.configuration import MetricsConfiguration
from weightspace.nfcore.configuration import ArchConfiguration
from weightspace.wsanalysis.configuration import AnalysisConfiguration

LOGGER = logging.getLogger(__name__)


# NOTE: Every new configuration section has to be added to these types.
class ConfigurationDict(TypedDict, total=False):
    analysis: AnalysisConfiguration
    arch: ArchConfiguration
    base: BaseTrainingConfiguration
    core: CoreConfiguration
    data: DataConfiguration
    diffusion: DiffusionConfiguration
    fitting: FittingConfiguration
    metrics: MetricsConfiguration


"""
Valid configurations to hold in the registry. Add in alphabetically.
"""

CONFIGURATION_ID = Literal[
    "analysis",
    "arch",
    "base",
    "core",
    "data",
    "diffusion",
    "fitting",
    "metrics",
]
"""
The section 'name' of your configuration. This is used to look up your particular configuration. Add in alphabetically.
"""

CONFIGURATION_TYPES = (
    AnalysisConfiguration
    | ArchConfiguration
    | BaseTrainingConfiguration
    | CoreConfiguration
    | DataConfiguration
    | DiffusionConfiguration
    | FittingConfiguration
    | MetricsConfiguration
)

CONF_T = TypeVar(
    "CONF_T",
    AnalysisConfiguration,
    ArchConfiguration,
    BaseTrainingConfiguration,
    CoreConfiguration,
    DataConfiguration,
    DiffusionConfiguration,
    FittingConfiguration,
    MetricsConfiguration,
)


class ConfigurationRegistry:
    __initialized_configurations__: ConfigurationDict = ConfigurationDict()
    __document__: dict[str, dict] | None = None
    """Raw sections of the run's configuration document; unset falls back to the default configuration files."""

    def __init__(self) -> None:
        if not self.__initialized_configurations__:
            self.register("core", CoreConfiguration)

    @classmethod
    def use_document(cls, document: dict[str, dict]) -> None:
        """Read every section from `document` from now on. Already registered sections are dropped."""
        cls.__initialized_configurations__.clear()
        cls.__document__ = document

    @classmethod
    def reset(cls) -> None:
        cls.__initialized_configurations__.clear()
        cls.__document__ = None

    def _raw_section(self, configuration_id: CONFIGURATION_ID) -> dict:
        if self.__document__ is not None:
            section = self.__document__.get(configuration_id, {})
            if not isinstance(section, dict):
                raise ConfigurationError(f"Configuration section '{configuration_id}' must be an object")
            return section
        return read_configuration_file(*DEFAULT_CONFIGURATION_FILE_PATHS, section=configuration_id, missing_ok=True)

    def _initialize(self, configuration_id: CONFIGURATION_ID, configuration_class: type[CONF_T]) -> CONF_T:
        raw_data = self._raw_section(configuration_id)
        try:
            cls = configuration_class(**raw_data)
        except ValidationError as e:
            raise ConfigurationError(parse_validation_error(e, configuration_id)) from e
        self.__initialized_configurations__[configuration_id] = cls
        return cls

    def register(self, configuration_id: CONFIGURATION_ID, configuration_class: type[CONF_T]) -> None:
        """
        This method adds a configuration to the registry. It will raise a KeyError in case the configuration has already
        been registered.
        """
        if configuration_id not in self.__initialized_configurations__:
            self._initialize(configuration_id, configuration_class)
        else:
            # Calling this twice is probably an error. Instead, Use add() to explicitly overwrite the config.
            raise KeyError(f"Configuration {configuration_class.__name__} already registered as '{configuration_id}'")

    def add(self, configuration_id: CONFIGURATION_ID, configuration: CONF_T) -> None:
        """
        This method just force-adds a configuration to the registry. Useful for overriding configurations or refreshing.
        Prefer using register() though when possible.
        """
        self.__initialized_configurations__[configuration_id] = configuration

    def mutate(self, configuration_id: CONFIGURATION_ID, configuration_class: type[CONF_T], **kwargs: Any) -> CONF_T:
        """
        Creates a configuration from an existing configuration, with keys modified. The result is not stored.
        """
        current_model = self.lookup(configuration_id, configuration_class)
        current = {name: value for name, value in current_model if name not in kwargs}
        return configuration_class(**current, **kwargs)

    def lookup(self, configuration_id: CONFIGURATION_ID, configuration_type: type[CONF_T]) -> CONF_T:
        """
        Lookup by the configuration's ID, which is the name of its section in the configuration document. Sections that
        were never registered are initialised on first lookup.
        """
        LOGGER.debug("Loading %s: %s", configuration_id, configuration_type.__name__)
        if configuration_id not in self.__initialized_configurations__:
            return self._initialize(configuration_id, configuration_type)
        return cast(CONF_T, self.__initialized_configurations__[configuration_id])

    def available(self, configuration_id: CONFIGURATION_ID, configuration_class: type[CONF_T]) -> bool:
        """
        Check if requested configuration is available. It will register the configuration if it validates and return
        True, returns False otherwise.
        """
        if configuration_id in self.__initialized_configurations__:
            LOGGER.debug("Configuration %s available.", configuration_id)
            return True
        try:
            self._initialize(configuration_id, configuration_class)
        except ConfigurationError:
            LOGGER.debug("Configuration %s not available.", configuration_id, exc_info=True)
            return False
        else:
            LOGGER.debug("Configuration %s available and registered", configuration_id)
            return True

    def resolved(self) -> dict[str, dict]:
        """Every registered section as plain JSON values, sorted by section name. Fields marked `exclude` are left out."""
        return {
            name: cast(Any, config).model_dump(mode="json")
            for name, config in sorted(self.__initialized_configurations__.items())
        }
