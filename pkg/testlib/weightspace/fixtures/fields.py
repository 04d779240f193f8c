import pytest
import torch

from weightspace.nfcore import FieldArch, WeightSet
from weightspace.numerics import Rng


@pytest.fixture()
def tiny_standalone_arch():
    return FieldArch.image_standalone(hidden_width=16, hidden_layers=2, omega0=4.0)


@pytest.fixture()
def tiny_modulated_arch():
    return FieldArch.image_modulated(num_blocks=2, hidden_width=16, latent_dim=8, mapping_width=16, omega0=4.0)


@pytest.fixture()
def tiny_sdf_modulated_arch():
    return FieldArch.sdf_modulated(num_blocks=2, hidden_width=16, latent_dim=8, mapping_width=16)


@pytest.fixture()
def tiny_base(tiny_modulated_arch):
    return WeightSet.initialize(tiny_modulated_arch, Rng(11))


@pytest.fixture()
def image_coords():
    return torch.from_numpy(Rng(5).uniform(-1.0, 1.0, (32, 2)))
