import math

import numpy as np
import pytest
import torch

from toolkit.exceptions import ConfigurationError, ShapeMismatchError
from weightspace.fitting import LoraSpace, Parameterization, StandaloneSpace, make_space
from weightspace.lora import LoraMode, MaskMode
from weightspace.nfcore import FieldArch
from weightspace.numerics import Rng


@pytest.fixture()
def standalone_arch():
    return FieldArch.image_standalone(hidden_width=16, hidden_layers=2, omega0=4.0)


def _code(space, seed=0):
    return Rng(seed).normal(space.code_length)


@pytest.mark.unit()
@pytest.mark.parametrize(
    ("parameterization", "lora_mode", "mask_mode"),
    [
        ("mlp", None, None),
        ("mlp-asym", None, MaskMode.STANDALONE),
        ("lora", LoraMode.ADDITIVE, None),
        ("lora-asym", LoraMode.ADDITIVE, MaskMode.ADDITIVE),
        ("mlora", LoraMode.MULTIPLICATIVE, None),
        ("mlora-asym", LoraMode.MULTIPLICATIVE, MaskMode.MULTIPLICATIVE),
    ],
)
def test_parameterization_modes(parameterization, lora_mode, mask_mode):
    p = Parameterization(parameterization)
    assert p.lora_mode is lora_mode
    assert p.mask_mode is mask_mode
    assert p.is_asym == (mask_mode is not None)


@pytest.mark.unit()
def test_mlp_space_trains_every_weight(standalone_arch):
    space = make_space("mlp", standalone_arch=standalone_arch)
    assert isinstance(space, StandaloneSpace)
    assert space.trainable_count() == standalone_arch.parameter_count()


@pytest.mark.unit()
def test_asymmetric_mlp_excludes_frozen_entries(standalone_arch):
    space = make_space("mlp-asym", standalone_arch=standalone_arch, mask_seed=2)
    frozen = 2 * 16 * math.ceil(math.sqrt(16))
    assert space.trainable_count() == standalone_arch.parameter_count() - frozen


@pytest.mark.unit()
def test_flatten_unflatten_round_trip(standalone_arch):
    space = make_space("mlp-asym", standalone_arch=standalone_arch, mask_seed=2)
    tensors = space.initial(_code(space))
    restored = space.unflatten(space.flatten(tensors))
    for key, value in tensors.items():
        assert torch.equal(value, restored[key])


@pytest.mark.unit()
def test_unflatten_restores_frozen_values(standalone_arch):
    space = make_space("mlp-asym", standalone_arch=standalone_arch, mask_seed=2)
    restored = space.unflatten(np.zeros(space.trainable_count(), dtype=np.float32))
    for key, values in space.frozen_entries(restored).items():
        np.testing.assert_array_equal(values, space.mask.entries[key].values)


@pytest.mark.unit()
def test_initial_rejects_wrong_code_length(standalone_arch):
    space = make_space("mlp", standalone_arch=standalone_arch)
    with pytest.raises(ShapeMismatchError):
        space.initial(np.zeros(space.code_length + 1, dtype=np.float32))


@pytest.mark.unit()
def test_lora_without_base_is_rejected():
    with pytest.raises(ConfigurationError):
        make_space("lora")


@pytest.mark.unit()
def test_multiplicative_init_starts_near_all_ones(tiny_base):
    space = make_space("mlora-asym", base=tiny_base, rank=8, mask_seed=1)
    assert isinstance(space, LoraSpace)
    tensors = space.initial(_code(space))
    for spec in tiny_base.arch.modulated_layers():
        product = tensors[f"{spec.name}.B"] @ tensors[f"{spec.name}.A"]
        assert abs(float(product.mean()) - 1.0) < 0.2


@pytest.mark.unit()
def test_additive_init_starts_at_the_base(tiny_base, image_coords):
    space = make_space("lora", base=tiny_base, rank=4)
    tensors = space.initial(_code(space))
    assert all(float(tensors[f"{spec.name}.B"].abs().sum()) == 0.0 for spec in tiny_base.arch.modulated_layers())
    zero = {key: torch.zeros_like(value) for key, value in tensors.items()}
    torch.testing.assert_close(space.forward(tensors, image_coords), space.forward(zero, image_coords))


@pytest.mark.unit()
def test_lora_settings_describe_the_space(tiny_base):
    space = make_space("lora-asym", base=tiny_base, rank=8, init_scale=0.05)
    assert space.settings() == {"rank": 8, "mode": "additive", "init_scale": 0.05}
    assert space.mask.descriptor()["mode"] == "additive"
