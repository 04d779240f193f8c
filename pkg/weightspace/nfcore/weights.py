__all__ = ["StyleVector", "WeightSet", "flatten_tensors", "init_std", "unflatten_tensors"]

import hashlib
import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import torch
from numpy.typing import NDArray

from toolkit.exceptions import ShapeMismatchError
from weightspace.numerics import Rng, Tensor

from .arch import FieldArch


def flatten_tensors(tensors: Mapping[str, Tensor], order: Sequence[tuple[str, tuple[int, ...]]]) -> NDArray[np.float32]:
    parts = []
    for key, shape in order:
        value = tensors[key]
        if tuple(value.shape) != tuple(shape):
            raise ShapeMismatchError(f"flatten[{key}]", value.shape, shape)
        parts.append(value.detach().reshape(-1).to(torch.float32).cpu().numpy())
    if not parts:
        return np.zeros(0, dtype=np.float32)
    return np.concatenate(parts).astype(np.float32, copy=False)


def unflatten_tensors(vector: NDArray[np.floating], order: Sequence[tuple[str, tuple[int, ...]]]) -> dict[str, Tensor]:
    expected = sum(math.prod(shape) for _, shape in order)
    if vector.ndim != 1 or vector.shape[0] != expected:
        raise ShapeMismatchError("unflatten", vector.shape, (expected,))
    tensors: dict[str, Tensor] = {}
    offset = 0
    flat = torch.from_numpy(np.ascontiguousarray(vector, dtype=np.float32))
    for key, shape in order:
        size = math.prod(shape)
        tensors[key] = flat[offset : offset + size].reshape(shape).clone()
        offset += size
    return tensors


@dataclass(frozen=True, kw_only=True)
class WeightSet:
    """
    All dense weights of one network, keyed `<layer>.weight` / `<layer>.bias` in the architecture's order.
    """

    arch: FieldArch
    tensors: dict[str, Tensor]

    def __post_init__(self) -> None:
        for key, shape in self.arch.parameter_shapes():
            if key not in self.tensors:
                raise ShapeMismatchError(f"weightset[{key}]", (), shape)
            if tuple(self.tensors[key].shape) != shape:
                raise ShapeMismatchError(f"weightset[{key}]", self.tensors[key].shape, shape)

    def __getitem__(self, key: str) -> Tensor:
        return self.tensors[key]

    def __iter__(self) -> Iterator[str]:
        return iter(key for key, _ in self.arch.parameter_shapes())

    @property
    def arch_hash(self) -> str:
        return self.arch.content_hash()

    def content_hash(self) -> str:
        """SHA-256 over the architecture hash and the little-endian float32 parameter vector."""
        digest = hashlib.sha256(self.arch_hash.encode("ascii"))
        digest.update(self.flatten().astype("<f4").tobytes())
        return digest.hexdigest()

    def flatten(self) -> NDArray[np.float32]:
        return flatten_tensors(self.tensors, self.arch.parameter_shapes())

    @classmethod
    def unflatten(cls, vector: NDArray[np.floating], arch: FieldArch) -> "WeightSet":
        return cls(arch=arch, tensors=unflatten_tensors(vector, arch.parameter_shapes()))

    def detached(self) -> "WeightSet":
        return WeightSet(arch=self.arch, tensors={k: v.detach().clone() for k, v in self.tensors.items()})

    def requires_grad_(self, flag: bool = True) -> "WeightSet":
        for tensor in self.tensors.values():
            tensor.requires_grad_(flag)
        return self

    def parameters(self) -> list[Tensor]:
        return [self.tensors[key] for key in self]

    @classmethod
    def initialize(cls, arch: FieldArch, rng: Rng) -> "WeightSet":
        """Random initialisation: see `init_std`; style biases start at one so initial styles are near identity."""
        tensors = {}
        for key, shape in arch.parameter_shapes():
            tensors[key] = rng.torch_normal(shape, std=init_std(arch, key))
            if key.startswith("style.") and key.endswith(".bias"):
                tensors[key] = tensors[key] + 1.0
        return cls(arch=arch, tensors=tensors)


def init_std(arch: FieldArch, key: str) -> float:
    """
    Standard deviation used to map unit-normal codes onto a parameter tensor.

    The Fourier layer weights keep omega0 * W at a spread of at least 3 (max of 1/d_in and 3/omega0) and its bias
    gets 1/omega0 (unit-variance phases). ReLU layers use He scaling and the output and style layers
    1/sqrt(d_in). Other biases are small.
    """
    layer, kind = key.rsplit(".", 1)
    spec = next(s for s in arch.layers() if s.name == layer)
    if layer == "fourier":
        return max(1.0 / spec.d_in, 3.0 / arch.omega0) if kind == "weight" else 1.0 / arch.omega0
    if kind == "bias":
        return 0.01
    if layer == "output" or layer.startswith("style."):
        return 1.0 / math.sqrt(spec.d_in)
    if layer.endswith(".proj"):
        return 1.0 / math.sqrt(spec.d_in)
    return math.sqrt(2.0 / spec.d_in)


@dataclass(frozen=True, kw_only=True)
class StyleVector:
    """Per modulated layer scale vectors; each entry is (batch, d_in) or (d_in,)."""

    styles: dict[str, Tensor]

    def __getitem__(self, layer: str) -> Tensor:
        return self.styles[layer]

    def __len__(self) -> int:
        return len(self.styles)

    def detached(self) -> "StyleVector":
        return StyleVector(styles={k: v.detach().clone() for k, v in self.styles.items()})

