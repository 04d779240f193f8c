from .configuration_registry import ConfigurationRegistry
