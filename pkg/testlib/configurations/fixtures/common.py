import os
from pathlib import Path
from unittest.mock import patch
from uuid import uuid4

import pytest

from framework.configuration import CoreConfiguration
from registry import ConfigurationRegistry


# The config registry is designed to persist the config state across registry instances. Therefore, it has to be
# explicitly cleared state between test to not cause order dependencies.
@pytest.fixture(autouse=True)
def _clear_config_registry() -> None:
    ConfigurationRegistry.reset()


@pytest.fixture(autouse=True)
def _no_default_configuration_file():
    with patch("registry.configuration_registry.DEFAULT_CONFIGURATION_FILE_PATHS", (Path(f"{uuid4()}.json"),)) as f:
        yield f


@pytest.fixture()
def core_config_data(tmp_path):
    return {
        "seed": 7,
        "output_dir": str(tmp_path / "run"),
        "jobs": 2,
        "torch_threads": 1,
        "log_level": "warning",
    }


@pytest.fixture()
def mock_core_env_vars(core_config_data):
    environment_variables = {"WSF_" + k.upper(): str(v) for k, v in core_config_data.items()}
    with patch.dict(os.environ, environment_variables):
        yield environment_variables


@pytest.fixture()
def core_config(core_config_data):
    return CoreConfiguration(**core_config_data)
