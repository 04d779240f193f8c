import pytest
import torch

from toolkit.exceptions import ConfigurationError, ShapeMismatchError
from weightspace.nfcore import (
    StyleVector,
    WeightSet,
    base_forward,
    fourier_layer,
    mapping_forward,
    modulate_weights,
    standalone_forward,
)
from weightspace.numerics import Rng


def _unit_styles(arch):
    return StyleVector(styles={spec.name: torch.ones(spec.d_in) for spec in arch.modulated_layers()})


@pytest.mark.unit()
def test_fourier_layer_with_zero_weights_is_sin_of_bias():
    p = torch.randn(5, 2)
    bias = torch.tensor([0.1, -0.3, 0.7])
    out = fourier_layer(p, torch.zeros(3, 2), bias, omega0=2.0)
    assert torch.allclose(out, torch.sin(2.0 * bias).expand(5, 3))


@pytest.mark.unit()
def test_fourier_layer_checks_input_dim():
    with pytest.raises(ShapeMismatchError):
        fourier_layer(torch.zeros(4, 3), torch.zeros(8, 2), torch.zeros(8), omega0=1.0)


@pytest.mark.unit()
def test_modulated_rows_have_unit_norm():
    weight = torch.randn(6, 5)
    style = torch.rand(5) + 0.5
    rows = torch.linalg.vector_norm(modulate_weights(weight, style), dim=-1)
    assert torch.allclose(rows, torch.ones(6), atol=1e-5)


@pytest.mark.unit()
def test_zero_style_gives_zero_weight():
    assert torch.count_nonzero(modulate_weights(torch.randn(4, 3), torch.zeros(3))) == 0


@pytest.mark.unit()
def test_unit_rows_and_unit_style_are_identity():
    weight = torch.nn.functional.normalize(torch.randn(4, 3), dim=-1)
    assert torch.allclose(modulate_weights(weight, torch.ones(3)), weight, atol=1e-6)


@pytest.mark.unit()
def test_batched_styles_give_batched_weights():
    weight = torch.randn(4, 3)
    styles = torch.rand(2, 3)
    batched = modulate_weights(weight, styles)
    assert batched.shape == (2, 4, 3)
    assert torch.allclose(batched[1], modulate_weights(weight, styles[1]))


@pytest.mark.unit()
def test_mapping_with_zero_affine_returns_style_biases(tiny_base):
    arch = tiny_base.arch
    tensors = dict(tiny_base.tensors)
    for spec in arch.modulated_layers():
        tensors[f"style.{spec.name}.weight"] = torch.zeros_like(tensors[f"style.{spec.name}.weight"])
    styles = mapping_forward(arch, tensors, torch.randn(arch.latent_dim))
    assert len(styles) == len(arch.modulated_layers())
    for spec in arch.modulated_layers():
        assert torch.equal(styles[spec.name], tensors[f"style.{spec.name}.bias"])


@pytest.mark.unit()
def test_mapping_checks_latent_dim(tiny_base):
    with pytest.raises(ShapeMismatchError):
        mapping_forward(tiny_base.arch, tiny_base, torch.zeros(tiny_base.arch.latent_dim + 1))


@pytest.mark.unit()
def test_unit_styles_reduce_to_residual_mlp(tiny_base, image_coords):
    arch = tiny_base.arch
    tensors = dict(tiny_base.tensors)
    for spec in arch.modulated_layers():
        tensors[f"{spec.name}.weight"] = torch.nn.functional.normalize(tensors[f"{spec.name}.weight"], dim=-1)

    out = base_forward(arch, tensors, image_coords, styles=_unit_styles(arch))

    h = torch.sin(arch.omega0 * (image_coords @ tensors["fourier.weight"].T + tensors["fourier.bias"]))
    for b in range(arch.num_blocks):
        skip = h
        for j in range(2):
            h = torch.relu(h @ tensors[f"block{b}.{j}.weight"].T + tensors[f"block{b}.{j}.bias"])
        h = h + skip
    expected = h @ tensors["output.weight"].T + tensors["output.bias"]
    assert torch.allclose(out, expected, atol=1e-5)


@pytest.mark.unit()
def test_batched_forward_matches_single_instances(tiny_base, image_coords):
    arch = tiny_base.arch
    z = torch.from_numpy(Rng(8).normal((3, arch.latent_dim)))
    p = image_coords.expand(3, *image_coords.shape)
    batched = base_forward(arch, tiny_base, p, z=z)
    assert batched.shape == (3, image_coords.shape[0], arch.output_dim)
    for i in range(3):
        single = base_forward(arch, tiny_base, image_coords, z=z[i])
        assert torch.allclose(batched[i], single, atol=1e-5)


@pytest.mark.unit()
def test_overlay_replaces_trunk_weights(tiny_base, image_coords):
    arch = tiny_base.arch
    z = torch.zeros(arch.latent_dim)
    plain = base_forward(arch, tiny_base, image_coords, z=z)
    same = base_forward(arch, tiny_base, image_coords, z=z, overlay=lambda name, w: w)
    changed = base_forward(arch, tiny_base, image_coords, z=z, overlay=lambda name, w: -w)
    assert torch.equal(plain, same)
    assert not torch.allclose(plain, changed)


@pytest.mark.unit()
def test_base_forward_needs_latent_or_styles(tiny_base, image_coords):
    with pytest.raises(ConfigurationError):
        base_forward(tiny_base.arch, tiny_base, image_coords)


@pytest.mark.unit()
def test_standalone_forward_shape_and_kind(tiny_standalone_arch, tiny_base, image_coords):
    weights = WeightSet.initialize(tiny_standalone_arch, Rng(2))
    assert standalone_forward(tiny_standalone_arch, weights, image_coords).shape == (32, 3)
    with pytest.raises(ConfigurationError):
        standalone_forward(tiny_base.arch, tiny_base, image_coords)
    with pytest.raises(ConfigurationError):
        base_forward(tiny_standalone_arch, weights, image_coords, z=torch.zeros(8))


@pytest.mark.unit()
def test_standalone_gradients_match_finite_differences(tiny_standalone_arch, image_coords):
    weights = WeightSet.initialize(tiny_standalone_arch, Rng(6))
    tensors = {k: v.to(torch.float64).requires_grad_(True) for k, v in weights.tensors.items()}
    p = image_coords.to(torch.float64)

    def loss(hidden):
        return (standalone_forward(tiny_standalone_arch, tensors | {"hidden0.weight": hidden}, p) ** 2).mean()

    assert torch.autograd.gradcheck(loss, (tensors["hidden0.weight"],), eps=1e-6, atol=1e-4)
