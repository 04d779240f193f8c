__all__ = ["FieldArch", "FieldKind", "LayerSpec"]

import hashlib
import json
from dataclasses import dataclass
from enum import StrEnum
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator


class FieldKind(StrEnum):
    STANDALONE = "standalone"
    MODULATED = "modulated"


@dataclass(frozen=True, kw_only=True)
class LayerSpec:
    """One dense layer of a field: weight (d_out x d_in) plus an optional bias."""

    name: str
    d_out: int
    d_in: int
    bias: bool = True
    modulated: bool = False
    """Trunk layer whose weight is modulated by a style vector (and adapted by LoRA)."""
    hidden: bool = False
    """Square hidden layer of a standalone MLP (the target of its asymmetric mask)."""


class FieldArch(BaseModel):
    """
    Immutable architecture description. The JSON document of this model is the architecture manifest, and its
    content hash binds weight datasets and checkpoints to the architecture they were produced with.

    standalone: Fourier layer sin(omega0 * (W p + b)), `hidden_layers` square ReLU layers, linear output.
    modulated:  Fourier layer, `num_blocks` residual blocks of 2 modulated ReLU layers, linear output, plus a mapping
                network turning a latent code into one style vector per modulated layer.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: FieldKind
    input_dim: PositiveInt = 2
    output_dim: PositiveInt = 3
    omega0: PositiveFloat = 32.0
    hidden_width: PositiveInt = 64
    hidden_layers: PositiveInt = 3
    num_blocks: PositiveInt = 4
    block_widths: tuple[PositiveInt, ...] | None = None
    """Per-block trunk widths; defaults to `hidden_width` for every block."""
    latent_dim: PositiveInt = 32
    mapping_layers: PositiveInt = 2
    mapping_width: PositiveInt = 64
    demod_eps: float = Field(default=1e-8, gt=0.0)

    @model_validator(mode="after")
    def check_block_widths(self) -> Self:
        if self.block_widths is not None and len(self.block_widths) != self.num_blocks:
            raise ValueError(f"block_widths has {len(self.block_widths)} entries for {self.num_blocks} blocks")
        return self

    @classmethod
    def image_standalone(cls, hidden_width: int = 94, **kwargs: object) -> "FieldArch":
        defaults: dict = {"hidden_width": hidden_width, "omega0": 32.0}
        return cls(kind=FieldKind.STANDALONE, input_dim=2, output_dim=3, **(defaults | kwargs))

    @classmethod
    def sdf_standalone(cls, hidden_width: int = 99, **kwargs: object) -> "FieldArch":
        defaults: dict = {"hidden_width": hidden_width, "omega0": 1.0}
        return cls(kind=FieldKind.STANDALONE, input_dim=3, output_dim=1, **(defaults | kwargs))

    @classmethod
    def image_modulated(cls, **kwargs: object) -> "FieldArch":
        defaults: dict = {"num_blocks": 4, "hidden_width": 64, "latent_dim": 32, "omega0": 32.0}
        return cls(kind=FieldKind.MODULATED, input_dim=2, output_dim=3, **(defaults | kwargs))

    @classmethod
    def sdf_modulated(cls, **kwargs: object) -> "FieldArch":
        defaults: dict = {"num_blocks": 3, "hidden_width": 64, "latent_dim": 32, "omega0": 1.0}
        return cls(kind=FieldKind.MODULATED, input_dim=3, output_dim=1, **(defaults | kwargs))

    @property
    def widths(self) -> tuple[int, ...]:
        if self.kind is FieldKind.STANDALONE:
            return (self.hidden_width,) * self.hidden_layers
        return self.block_widths or (self.hidden_width,) * self.num_blocks

    def trunk_layers(self) -> list[LayerSpec]:
        """Layers of the synthesis network in forward order."""
        if self.kind is FieldKind.STANDALONE:
            h = self.hidden_width
            layers = [LayerSpec(name="fourier", d_out=h, d_in=self.input_dim)]
            layers += [LayerSpec(name=f"hidden{i}", d_out=h, d_in=h, hidden=True) for i in range(self.hidden_layers)]
            layers.append(LayerSpec(name="output", d_out=self.output_dim, d_in=h))
            return layers

        widths = self.widths
        layers = [LayerSpec(name="fourier", d_out=widths[0], d_in=self.input_dim)]
        previous = widths[0]
        for b, width in enumerate(widths):
            layers.append(LayerSpec(name=f"block{b}.0", d_out=width, d_in=previous, modulated=True))
            layers.append(LayerSpec(name=f"block{b}.1", d_out=width, d_in=width, modulated=True))
            if width != previous:
                layers.append(LayerSpec(name=f"block{b}.proj", d_out=width, d_in=previous, bias=False))
            previous = width
        layers.append(LayerSpec(name="output", d_out=self.output_dim, d_in=previous))
        return layers

    def mapping_specs(self) -> list[LayerSpec]:
        """Mapping MLP layers followed by one style affine per modulated trunk layer."""
        if self.kind is FieldKind.STANDALONE:
            return []
        layers = []
        previous = self.latent_dim
        for i in range(self.mapping_layers):
            layers.append(LayerSpec(name=f"mapping{i}", d_out=self.mapping_width, d_in=previous))
            previous = self.mapping_width
        layers += [
            LayerSpec(name=f"style.{spec.name}", d_out=spec.d_in, d_in=previous)
            for spec in self.trunk_layers()
            if spec.modulated
        ]
        return layers

    def layers(self) -> list[LayerSpec]:
        return self.trunk_layers() + self.mapping_specs()

    def modulated_layers(self) -> list[LayerSpec]:
        return [spec for spec in self.trunk_layers() if spec.modulated]

    def parameter_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """
        The documented flattening order: layers in `layers()` order, each weight before its bias.
        """
        shapes: list[tuple[str, tuple[int, ...]]] = []
        for spec in self.layers():
            shapes.append((f"{spec.name}.weight", (spec.d_out, spec.d_in)))
            if spec.bias:
                shapes.append((f"{spec.name}.bias", (spec.d_out,)))
        return shapes

    def parameter_count(self) -> int:
        total = 0
        for _, shape in self.parameter_shapes():
            count = 1
            for dim in shape:
                count *= dim
            total += count
        return total

    def manifest(self) -> dict:
        return json.loads(self.model_dump_json())

    def content_hash(self) -> str:
        canonical = json.dumps(self.manifest(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
