__all__ = ["AsymMask", "FrozenEntries", "MaskFill", "MaskMode", "apply_mask", "frozen_per_row", "make_mask"]

import hashlib
import math
from collections.abc import Mapping, MutableMapping
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
import torch
from numpy.typing import NDArray

from toolkit.exceptions import ConfigurationError, ShapeMismatchError
from weightspace.nfcore import FieldArch, FieldKind, init_std
from weightspace.numerics import Rng, Tensor

MASK_STREAM: int = 0x6D61736B
"""Rng stream reserved for mask construction."""


class MaskMode(StrEnum):
    STANDALONE = "standalone"
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


class MaskFill(StrEnum):
    ZERO = "zero"
    GAUSSIAN = "gaussian"


def frozen_per_row(d_out: int) -> int:
    if d_out < 1:
        raise ConfigurationError(f"Cannot mask a tensor with {d_out} output rows")
    return math.ceil(math.sqrt(d_out))


@dataclass(frozen=True, kw_only=True)
class FrozenEntries:
    key: str
    shape: tuple[int, int]
    rows: NDArray[np.int64]
    cols: NDArray[np.int64]
    values: NDArray[np.float32]

    def trainable(self) -> NDArray[np.bool_]:
        keep = np.ones(self.shape, dtype=bool)
        keep[self.rows, self.cols] = False
        return keep


@dataclass(frozen=True, kw_only=True)
class AsymMask:
    """
    Frozen entries shared by every fit of a run. Positions and values never change during optimisation.
    """

    mode: MaskMode | None
    kappa: float
    seed: int
    entries: dict[str, FrozenEntries] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> "AsymMask":
        return cls(mode=None, kappa=0.0, seed=0)

    @property
    def fill(self) -> MaskFill:
        return MaskFill.ZERO if self.mode is MaskMode.MULTIPLICATIVE else MaskFill.GAUSSIAN

    def __bool__(self) -> bool:
        return bool(self.entries)

    def frozen_count(self) -> int:
        return sum(e.values.size for e in self.entries.values())

    def trainable(self, key: str, shape: tuple[int, ...]) -> NDArray[np.bool_]:
        if key not in self.entries:
            return np.ones(shape, dtype=bool)
        entry = self.entries[key]
        if tuple(shape) != entry.shape:
            raise ShapeMismatchError(f"mask[{key}]", shape, entry.shape)
        return entry.trainable()

    def apply(self, tensors: MutableMapping[str, Tensor]) -> None:
        """Overwrite frozen entries in place. Idempotent."""
        with torch.no_grad():
            for key, entry in self.entries.items():
                target = tensors[key]
                if tuple(target.shape) != entry.shape:
                    raise ShapeMismatchError(f"apply_mask[{key}]", target.shape, entry.shape)
                target[torch.from_numpy(entry.rows), torch.from_numpy(entry.cols)] = torch.from_numpy(entry.values)

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        for key in sorted(self.entries):
            entry = self.entries[key]
            digest.update(key.encode("utf-8"))
            digest.update(entry.rows.astype("<i8").tobytes())
            digest.update(entry.cols.astype("<i8").tobytes())
            digest.update(entry.values.astype("<f4").tobytes())
        return digest.hexdigest()

    def descriptor(self) -> dict:
        return {
            "mode": self.mode.value if self.mode else None,
            "fill": self.fill.value if self.mode else None,
            "kappa": self.kappa,
            "seed": self.seed,
            "frozen": self.frozen_count(),
            "tensors": {
                key: {"shape": list(entry.shape), "per_row": frozen_per_row(entry.shape[0])}
                for key, entry in self.entries.items()
            },
            "hash": self.content_hash(),
        }


def mask_targets(arch: FieldArch, mode: MaskMode, rank: int | None) -> dict[str, tuple[int, int]]:
    """Tensors carrying frozen entries: square hidden weights of a standalone MLP, or every LoRA B factor."""
    if mode is MaskMode.STANDALONE:
        if arch.kind is not FieldKind.STANDALONE:
            raise ConfigurationError("A standalone mask needs a standalone architecture")
        return {f"{spec.name}.weight": (spec.d_out, spec.d_in) for spec in arch.trunk_layers() if spec.hidden}
    if rank is None:
        raise ConfigurationError("A LoRA mask needs the adaptation rank")
    return {f"{spec.name}.B": (spec.d_out, rank) for spec in arch.modulated_layers()}


def make_mask(
    arch: FieldArch,
    mode: MaskMode | str,
    kappa: float,
    seed: int,
    *,
    rank: int | None = None,
    scale: float | Mapping[str, float] | None = None,
) -> AsymMask:
    """
    Draw ceil(sqrt(d_out)) frozen positions per row, without replacement, for every masked tensor.

    Multiplicative masks freeze entries at zero. Additive and standalone masks freeze them at draws of
    N(0, kappa * std^2), where std is the tensor's own initialisation scale (`scale`, or the architecture's
    `init_std` for standalone weights).
    """
    mode = MaskMode(mode)
    if mode is not MaskMode.MULTIPLICATIVE and kappa <= 0:
        raise ConfigurationError(f"kappa must be positive for {mode} masks, got {kappa}")
    rng = Rng(seed, MASK_STREAM)
    entries = {}
    for key, (d_out, d_in) in mask_targets(arch, mode, rank).items():
        per_row = frozen_per_row(d_out)
        if per_row >= d_in:
            raise ConfigurationError(
                f"Mask on '{key}' freezes {per_row} of {d_in} entries per row; increase the rank or width",
            )
        rows = np.repeat(np.arange(d_out, dtype=np.int64), per_row)
        cols = np.concatenate([np.sort(rng.choice_without_replacement(d_in, per_row)) for _ in range(d_out)])
        if mode is MaskMode.MULTIPLICATIVE:
            values = np.zeros(rows.size, dtype=np.float32)
        else:
            if scale is None:
                std = init_std(arch, key)
            elif isinstance(scale, Mapping):
                std = scale[key]
            else:
                std = scale
            values = rng.normal(rows.size, std=math.sqrt(kappa) * std)
        entries[key] = FrozenEntries(key=key, shape=(d_out, d_in), rows=rows, cols=cols, values=values)
    return AsymMask(mode=mode, kappa=kappa, seed=seed, entries=entries)


def apply_mask(tensors: MutableMapping[str, Tensor], mask: AsymMask) -> MutableMapping[str, Tensor]:
    mask.apply(tensors)
    return tensors
