__all__ = [
    "WeightOverlay",
    "base_forward",
    "fourier_layer",
    "mapping_forward",
    "modulate_weights",
    "standalone_forward",
]

from collections.abc import Callable, Mapping

import torch

from toolkit.exceptions import ConfigurationError, ShapeMismatchError
from weightspace.numerics import Tensor

from .arch import FieldArch, FieldKind
from .weights import StyleVector, WeightSet

WeightOverlay = Callable[[str, Tensor], Tensor]
"""Maps (layer name, base weight) to the weight actually used; LoRA adaptation plugs in here."""


def _tensors(weights: WeightSet | Mapping[str, Tensor]) -> Mapping[str, Tensor]:
    return weights.tensors if isinstance(weights, WeightSet) else weights


def _dense(h: Tensor, weight: Tensor, bias: Tensor | None) -> Tensor:
    # weight is (d_out, d_in) or per instance (batch, d_out, d_in)
    if h.shape[-1] != weight.shape[-1]:
        raise ShapeMismatchError("dense", h.shape, weight.shape)
    out = torch.matmul(h, weight.transpose(-1, -2))
    if bias is not None:
        out = out + (bias.unsqueeze(-2) if bias.ndim == 2 else bias)
    return out


def fourier_layer(p: Tensor, weight: Tensor, bias: Tensor, omega0: float) -> Tensor:
    if p.shape[-1] != weight.shape[1]:
        raise ShapeMismatchError("fourier_layer", p.shape, weight.shape)
    return torch.sin(omega0 * _dense(p, weight, bias))


def standalone_forward(arch: FieldArch, weights: WeightSet | Mapping[str, Tensor], p: Tensor) -> Tensor:
    if arch.kind is not FieldKind.STANDALONE:
        raise ConfigurationError(f"standalone_forward needs a standalone architecture, got '{arch.kind}'")
    w = _tensors(weights)
    h = fourier_layer(p, w["fourier.weight"], w["fourier.bias"], arch.omega0)
    for i in range(arch.hidden_layers):
        h = torch.relu(_dense(h, w[f"hidden{i}.weight"], w[f"hidden{i}.bias"]))
    return _dense(h, w["output.weight"], w["output.bias"])


def modulate_weights(weight: Tensor, style: Tensor, eps: float = 1e-8) -> Tensor:
    """
    Scale the input channels of `weight` by `style`, then renormalise every output row to unit length.
    A batched style (batch, d_in) yields a batched weight (batch, d_out, d_in).
    """
    if style.shape[-1] != weight.shape[-1]:
        raise ShapeMismatchError("modulate_weights", weight.shape, style.shape)
    modulated = weight * style.unsqueeze(-2)
    return modulated / torch.sqrt(torch.sum(modulated * modulated, dim=-1, keepdim=True) + eps)


def mapping_forward(arch: FieldArch, weights: WeightSet | Mapping[str, Tensor], z: Tensor) -> StyleVector:
    if z.shape[-1] != arch.latent_dim:
        raise ShapeMismatchError("mapping_forward", z.shape, (arch.latent_dim,))
    w = _tensors(weights)
    h = z
    for i in range(arch.mapping_layers):
        h = torch.relu(_dense(h, w[f"mapping{i}.weight"], w[f"mapping{i}.bias"]))
    styles = {
        spec.name: _dense(h, w[f"style.{spec.name}.weight"], w[f"style.{spec.name}.bias"])
        for spec in arch.modulated_layers()
    }
    return StyleVector(styles=styles)


def base_forward(
    arch: FieldArch,
    weights: WeightSet | Mapping[str, Tensor],
    p: Tensor,
    *,
    z: Tensor | None = None,
    styles: StyleVector | None = None,
    overlay: WeightOverlay | None = None,
) -> Tensor:
    """
    Evaluate the modulated field at coordinates `p`.

    Styles come from `z` through the mapping network unless given directly. For a batch of instances pass
    p as (batch, points, n) with z as (batch, d_z); for one instance p is (points, n) and z is (d_z,).
    """
    if arch.kind is not FieldKind.MODULATED:
        raise ConfigurationError(f"base_forward needs a modulated architecture, got '{arch.kind}'")
    if styles is None:
        if z is None:
            raise ConfigurationError("base_forward needs either a latent code or precomputed styles")
        styles = mapping_forward(arch, weights, z)
    w = _tensors(weights)

    h = fourier_layer(p, w["fourier.weight"], w["fourier.bias"], arch.omega0)
    for b in range(arch.num_blocks):
        block_input = h
        for j in range(2):
            name = f"block{b}.{j}"
            weight = w[f"{name}.weight"]
            if overlay is not None:
                weight = overlay(name, weight)
            demodulated = modulate_weights(weight, styles[name], arch.demod_eps)
            bias = w[f"{name}.bias"]
            if demodulated.ndim == 3 and h.ndim == 2:
                h = h.unsqueeze(0)
            h = torch.relu(_dense(h, demodulated, bias))
        if f"block{b}.proj.weight" in w:
            block_input = _dense(block_input, w[f"block{b}.proj.weight"], None)
        h = h + block_input
    return _dense(h, w["output.weight"], w["output.bias"])
