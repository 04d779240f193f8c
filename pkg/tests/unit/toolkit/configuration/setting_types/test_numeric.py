import pytest
from pydantic import BaseModel, ValidationError

from toolkit.configuration.setting_types import UnitIntervalList, LearningRate, Seed, UnitInterval


class SettingsModel(BaseModel):
    lr: LearningRate = 1e-3
    fraction: UnitInterval = 0.5
    seed: Seed = 0
    grid: UnitIntervalList = [0.0]


@pytest.mark.unit()
def test_float_list_from_string():
    assert SettingsModel(grid="0,0.5,1").grid == [0.0, 0.5, 1.0]
    assert SettingsModel(grid=[0.25]).grid == [0.25]


@pytest.mark.unit()
@pytest.mark.parametrize("kwargs", [{"lr": 0.0}, {"fraction": 1.5}, {"seed": -1}, {"grid": "a,b"}, {"grid": "0,1.5"}])
def test_invalid_values(kwargs):
    with pytest.raises(ValidationError):
        SettingsModel(**kwargs)
