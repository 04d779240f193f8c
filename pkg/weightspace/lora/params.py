__all__ = ["LoraParams", "lora_forward", "lora_layout", "permute_rank", "zero_latent_styles"]

from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np
import torch
from numpy.typing import NDArray

from toolkit.exceptions import ConfigurationError, ShapeMismatchError
from weightspace.nfcore import (
    FieldArch,
    FieldKind,
    StyleVector,
    WeightSet,
    base_forward,
    flatten_tensors,
    mapping_forward,
    unflatten_tensors,
)
from weightspace.numerics import Tensor

from .adapt import LoraMode, adapt_weight


def lora_layout(arch: FieldArch, rank: int) -> list[tuple[str, tuple[int, ...]]]:
    """
    Flattening order of LoRA factors: adapted layers in forward order, A (r x d_in) before B (d_out x r).
    Only the modulated trunk layers are adapted; biases and the mapping network stay frozen.
    """
    if arch.kind is not FieldKind.MODULATED:
        raise ConfigurationError("LoRA adapts a modulated base field")
    if rank < 1:
        raise ConfigurationError(f"LoRA rank must be at least 1, got {rank}")
    layout: list[tuple[str, tuple[int, ...]]] = []
    for spec in arch.modulated_layers():
        if rank > min(spec.d_in, spec.d_out):
            raise ConfigurationError(f"LoRA rank {rank} exceeds min({spec.d_out}, {spec.d_in}) of layer '{spec.name}'")
        layout.append((f"{spec.name}.A", (rank, spec.d_in)))
        layout.append((f"{spec.name}.B", (spec.d_out, rank)))
    return layout


@dataclass(kw_only=True)
class LoraParams:
    """Per-layer low-rank factors of one instance. Single owner: one fitting task mutates it."""

    mode: LoraMode
    rank: int
    factors: dict[str, tuple[Tensor, Tensor]]

    def __post_init__(self) -> None:
        self.mode = LoraMode(self.mode)
        for layer, (a, b) in self.factors.items():
            if a.ndim != 2 or b.ndim != 2 or a.shape[0] != self.rank or b.shape[1] != self.rank:
                raise ShapeMismatchError(f"lora[{layer}]", a.shape, b.shape)

    @property
    def layers(self) -> list[str]:
        return list(self.factors)

    def tensors(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for layer, (a, b) in self.factors.items():
            out[f"{layer}.A"] = a
            out[f"{layer}.B"] = b
        return out

    def __iter__(self) -> Iterator[Tensor]:
        for a, b in self.factors.values():
            yield a
            yield b

    def parameters(self) -> list[Tensor]:
        return list(self)

    def requires_grad_(self, flag: bool = True) -> "LoraParams":
        for tensor in self:
            tensor.requires_grad_(flag)
        return self

    def detached(self) -> "LoraParams":
        return LoraParams(
            mode=self.mode,
            rank=self.rank,
            factors={k: (a.detach().clone(), b.detach().clone()) for k, (a, b) in self.factors.items()},
        )

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        order: list[tuple[str, tuple[int, ...]]] = []
        for layer, (a, b) in self.factors.items():
            order.append((f"{layer}.A", tuple(a.shape)))
            order.append((f"{layer}.B", tuple(b.shape)))
        return order

    def flatten(self) -> NDArray[np.float32]:
        return flatten_tensors(self.tensors(), self.layout())

    @classmethod
    def from_tensors(cls, mode: LoraMode, rank: int, tensors: dict[str, Tensor]) -> "LoraParams":
        layers = [key[:-2] for key in tensors if key.endswith(".A")]
        return cls(mode=mode, rank=rank, factors={layer: (tensors[f"{layer}.A"], tensors[f"{layer}.B"]) for layer in layers})

    @classmethod
    def unflatten(cls, vector: NDArray[np.floating], arch: FieldArch, mode: LoraMode, rank: int) -> "LoraParams":
        return cls.from_tensors(mode, rank, unflatten_tensors(vector, lora_layout(arch, rank)))

    def adapted(self, base: WeightSet) -> dict[str, Tensor]:
        """Adapted weight W' of every adapted layer."""
        return {layer: adapt_weight(self.mode, base[f"{layer}.weight"], a, b) for layer, (a, b) in self.factors.items()}


def _check_permutation(perm: Sequence[int] | NDArray[np.integer], rank: int) -> torch.Tensor:
    index = torch.as_tensor(np.asarray(perm, dtype=np.int64))
    if index.ndim != 1 or index.numel() != rank or not torch.equal(torch.sort(index).values, torch.arange(rank)):
        raise ConfigurationError(f"{list(np.asarray(perm))} is not a permutation of {rank} rank components")
    return index


def permute_rank(params: LoraParams, perm: Sequence[int] | NDArray[np.integer]) -> LoraParams:
    """Reorder rows of every A and the matching columns of every B; B'A' equals BA."""
    index = _check_permutation(perm, params.rank)
    return LoraParams(
        mode=params.mode,
        rank=params.rank,
        factors={layer: (a[index].clone(), b[:, index].clone()) for layer, (a, b) in params.factors.items()},
    )


def zero_latent_styles(arch: FieldArch, base: WeightSet) -> StyleVector:
    """Styles of the prior mean latent z=0, used for every LoRA fit."""
    with torch.no_grad():
        return mapping_forward(arch, base, torch.zeros(arch.latent_dim, dtype=base["output.weight"].dtype)).detached()


def lora_forward(
    arch: FieldArch,
    base: WeightSet,
    params: LoraParams,
    p: Tensor,
    styles: StyleVector | None = None,
) -> Tensor:
    """Base field with every adapted trunk weight replaced by its LoRA-adapted counterpart; base weights stay frozen."""
    known = {spec.name for spec in arch.modulated_layers()}
    unknown = [layer for layer in params.factors if layer not in known]
    if unknown:
        raise ConfigurationError(f"LoRA adapts layers {unknown} that are not modulated layers of the architecture")
    if styles is None:
        styles = zero_latent_styles(arch, base)
    frozen = {key: value.detach() for key, value in base.tensors.items()}

    def overlay(name: str, weight: Tensor) -> Tensor:
        if name not in params.factors:
            return weight
        a, b = params.factors[name]
        return adapt_weight(params.mode, weight, a, b)

    return base_forward(arch, frozen, p, styles=styles, overlay=overlay)
