"""
Parameter spaces: how a flat representation vector maps onto the tensors a field is evaluated with.

A space owns the layout of the fitted tensors, the asymmetric mask (possibly empty) and the initialisation from a
unit-normal code. Representations exclude frozen entries; `unflatten` puts the frozen values back.
"""

__all__ = [
    "LoraSpace",
    "ParameterSpace",
    "Parameterization",
    "StandaloneSpace",
    "make_space",
    "space_from_dataset",
]

import logging
import math
from abc import ABC, abstractmethod
from enum import StrEnum

import numpy as np
import torch
from numpy.typing import NDArray

from toolkit.exceptions import ConfigurationError, HashMismatchError, ShapeMismatchError
from weightspace.datastore import WeightDataset
from weightspace.lora import (
    AsymMask,
    LoraMode,
    LoraParams,
    MaskMode,
    frozen_per_row,
    lora_forward,
    lora_layout,
    make_mask,
    zero_latent_styles,
)
from weightspace.nfcore import (
    FieldArch,
    FieldKind,
    WeightSet,
    flatten_tensors,
    init_std,
    standalone_forward,
    unflatten_tensors,
)
from weightspace.numerics import Tensor

LOGGER = logging.getLogger(__name__)

DEFAULT_INIT_SCALE: float = 0.1


class Parameterization(StrEnum):
    MLP = "mlp"
    MLP_ASYM = "mlp-asym"
    LORA = "lora"
    LORA_ASYM = "lora-asym"
    MLORA = "mlora"
    MLORA_ASYM = "mlora-asym"

    @property
    def is_lora(self) -> bool:
        return self not in (Parameterization.MLP, Parameterization.MLP_ASYM)

    @property
    def is_asym(self) -> bool:
        return self.value.endswith("-asym")

    @property
    def lora_mode(self) -> LoraMode | None:
        if not self.is_lora:
            return None
        return LoraMode.MULTIPLICATIVE if self.value.startswith("mlora") else LoraMode.ADDITIVE

    @property
    def mask_mode(self) -> MaskMode | None:
        if not self.is_asym:
            return None
        if not self.is_lora:
            return MaskMode.STANDALONE
        return MaskMode.MULTIPLICATIVE if self.lora_mode is LoraMode.MULTIPLICATIVE else MaskMode.ADDITIVE


class ParameterSpace(ABC):
    """Layout, mask and initialisation of one parameterization. Immutable and shared read-only across fits."""

    def __init__(self, parameterization: Parameterization, arch: FieldArch, mask: AsymMask) -> None:
        self.parameterization = parameterization
        self.arch = arch
        self.mask = mask
        self._keep = np.concatenate(
            [mask.trainable(key, shape).reshape(-1) for key, shape in self.layout()] or [np.zeros(0, dtype=bool)],
        )

    @abstractmethod
    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        raise NotImplementedError()

    @abstractmethod
    def _initial_tensors(self, code: dict[str, Tensor]) -> dict[str, Tensor]:
        raise NotImplementedError()

    @abstractmethod
    def forward(self, tensors: dict[str, Tensor], p: Tensor) -> Tensor:
        raise NotImplementedError()

    def settings(self) -> dict:
        """What a reader needs besides the mask to rebuild this space."""
        return {}

    @property
    def full_length(self) -> int:
        return sum(math.prod(shape) for _, shape in self.layout())

    @property
    def code_length(self) -> int:
        """Length of the unit-normal initialisation code; one draw per tensor entry, frozen ones included."""
        return self.full_length

    def trainable_count(self) -> int:
        return int(self._keep.sum())

    def trainable_mask(self) -> NDArray[np.bool_]:
        """Which entries of the full layout, in flattening order, are part of the representation."""
        return self._keep.copy()

    def initial(self, code: NDArray[np.floating]) -> dict[str, Tensor]:
        if code.shape != (self.code_length,):
            raise ShapeMismatchError("initial", code.shape, (self.code_length,))
        tensors = self._initial_tensors(unflatten_tensors(np.asarray(code, dtype=np.float32), self.layout()))
        self.mask.apply(tensors)
        return tensors

    def flatten(self, tensors: dict[str, Tensor]) -> NDArray[np.float32]:
        return flatten_tensors(tensors, self.layout())[self._keep]

    def unflatten(self, vector: NDArray[np.floating]) -> dict[str, Tensor]:
        if vector.shape != (self.trainable_count(),):
            raise ShapeMismatchError("unflatten", vector.shape, (self.trainable_count(),))
        full = np.zeros(self.full_length, dtype=np.float32)
        full[self._keep] = vector
        tensors = unflatten_tensors(full, self.layout())
        self.mask.apply(tensors)
        return tensors

    def frozen_entries(self, tensors: dict[str, Tensor]) -> dict[str, NDArray[np.float32]]:
        """Entries of `tensors` at the frozen positions, per masked tensor."""
        return {
            key: tensors[key].detach().numpy()[entry.rows, entry.cols]
            for key, entry in self.mask.entries.items()
        }


class StandaloneSpace(ParameterSpace):
    """All weights of a Fourier-feature MLP fitted from scratch."""

    def __init__(self, parameterization: Parameterization, arch: FieldArch, mask: AsymMask) -> None:
        if arch.kind is not FieldKind.STANDALONE:
            raise ConfigurationError(f"'{parameterization}' needs a standalone architecture")
        super().__init__(parameterization, arch, mask)

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        return self.arch.parameter_shapes()

    def _initial_tensors(self, code: dict[str, Tensor]) -> dict[str, Tensor]:
        return {key: code[key] * init_std(self.arch, key) for key, _ in self.layout()}

    def forward(self, tensors: dict[str, Tensor], p: Tensor) -> Tensor:
        return standalone_forward(self.arch, tensors, p)


class LoraSpace(ParameterSpace):
    """
    Low-rank factors over a frozen base field, evaluated with the styles of the zero latent.

    Multiplicative init: B = 1 + s*code, A = 1/m + s*code where m is the number of trainable entries per row of B,
    so B A starts near the all-ones matrix. Additive init: A = s*code, B = 0 apart from its frozen entries.
    """

    def __init__(
        self,
        parameterization: Parameterization,
        arch: FieldArch,
        base: WeightSet,
        rank: int,
        mask: AsymMask,
        init_scale: float = DEFAULT_INIT_SCALE,
    ) -> None:
        if base.arch != arch:
            raise ConfigurationError("The base weights were trained for a different architecture")
        self.base = base.detached()
        self.rank = rank
        self.mode = parameterization.lora_mode or LoraMode.ADDITIVE
        self.init_scale = init_scale
        self._layout = lora_layout(arch, rank)
        super().__init__(parameterization, arch, mask)
        self.styles = zero_latent_styles(arch, self.base)

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        return self._layout

    def settings(self) -> dict:
        return {"rank": self.rank, "mode": self.mode.value, "init_scale": self.init_scale}

    def _trainable_per_row(self, d_out: int) -> int:
        return self.rank - frozen_per_row(d_out) if self.mask else self.rank

    def _initial_tensors(self, code: dict[str, Tensor]) -> dict[str, Tensor]:
        s = self.init_scale
        tensors: dict[str, Tensor] = {}
        for key, shape in self._layout:
            if self.mode is LoraMode.MULTIPLICATIVE:
                if key.endswith(".A"):
                    d_out = next(d for k, (d, _) in self._layout if k == f"{key[:-2]}.B")
                    tensors[key] = 1.0 / self._trainable_per_row(d_out) + s * code[key]
                else:
                    tensors[key] = 1.0 + s * code[key]
            else:
                tensors[key] = s * code[key] if key.endswith(".A") else torch.zeros(shape)
        return tensors

    def forward(self, tensors: dict[str, Tensor], p: Tensor) -> Tensor:
        params = LoraParams.from_tensors(self.mode, self.rank, tensors)
        return lora_forward(self.arch, self.base, params, p, styles=self.styles)


def _mask_for(
    parameterization: Parameterization,
    arch: FieldArch,
    *,
    kappa: float,
    mask_seed: int,
    rank: int | None,
    init_scale: float,
) -> AsymMask:
    mode = parameterization.mask_mode
    if mode is None:
        return AsymMask.empty()
    scale = init_scale if mode is MaskMode.ADDITIVE else None
    return make_mask(arch, mode, kappa, mask_seed, rank=rank, scale=scale)


def make_space(
    parameterization: Parameterization | str,
    *,
    standalone_arch: FieldArch | None = None,
    base: WeightSet | None = None,
    rank: int = 4,
    kappa: float = 6.0,
    mask_seed: int = 0,
    init_scale: float = DEFAULT_INIT_SCALE,
) -> ParameterSpace:
    parameterization = Parameterization(parameterization)
    if parameterization.is_lora:
        if base is None:
            raise ConfigurationError(f"'{parameterization}' adapts a trained base field; none was given")
        mask = _mask_for(parameterization, base.arch, kappa=kappa, mask_seed=mask_seed, rank=rank, init_scale=init_scale)
        space: ParameterSpace = LoraSpace(parameterization, base.arch, base, rank, mask, init_scale)
    else:
        if standalone_arch is None:
            raise ConfigurationError(f"'{parameterization}' needs a standalone architecture")
        mask = _mask_for(parameterization, standalone_arch, kappa=kappa, mask_seed=mask_seed, rank=None, init_scale=init_scale)
        space = StandaloneSpace(parameterization, standalone_arch, mask)
    LOGGER.debug(
        "Parameter space %s: %d trainable of %d entries", parameterization, space.trainable_count(), space.full_length,
    )
    return space


def space_from_dataset(dataset: WeightDataset, base: WeightSet | None = None) -> ParameterSpace:
    """Rebuild the space a dataset was fitted in; the mask is redrawn from its descriptor and its hash checked."""
    arch = FieldArch.model_validate(dataset.arch)
    if arch.content_hash() != dataset.arch_hash:
        raise HashMismatchError("<weight dataset arch>", dataset.arch_hash, arch.content_hash())
    if base is not None and dataset.base_hash is not None and base.content_hash() != dataset.base_hash:
        raise HashMismatchError("<base checkpoint>", dataset.base_hash, base.content_hash())
    mask_descriptor = dataset.mask or {}
    settings = dataset.settings
    space = make_space(
        dataset.parameterization,
        standalone_arch=arch,
        base=base,
        rank=settings.get("rank", 4),
        kappa=mask_descriptor.get("kappa", 6.0),
        mask_seed=mask_descriptor.get("seed", 0),
        init_scale=settings.get("init_scale", DEFAULT_INIT_SCALE),
    )
    if dataset.mask and dataset.mask.get("hash") != space.mask.content_hash():
        raise HashMismatchError("<weight dataset mask>", dataset.mask["hash"], space.mask.content_hash())
    if space.trainable_count() != dataset.record_length:
        raise ShapeMismatchError("space_from_dataset", (dataset.record_length,), (space.trainable_count(),))
    return space
