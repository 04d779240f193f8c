"""
Tokenizers map a batch of representation vectors to token tensors (B, L, G, D) and back.

A tokenizer is a gather index of shape (L, G, D) into the vector, with -1 marking zero padding: L positions in the
transformer sequence, G tokens grouped at each position (the rank components of a LoRA layer, otherwise 1) and D
entries per token. Every vector entry appears exactly once, so detokenize(tokenize(v)) == v.
"""

__all__ = [
    "TokenSeq",
    "Tokenizer",
    "build_tokenizer",
    "default_tokenizer_kind",
    "flat_tokenizer",
    "lora_tokenizer",
    "matrix_tokenizer",
]

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch
from numpy.typing import NDArray

from toolkit.exceptions import ConfigurationError, ShapeMismatchError
from weightspace.fitting import LoraSpace, ParameterSpace
from weightspace.numerics import Tensor

from .configuration import TokenizerKind

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, kw_only=True)
class TokenSeq:
    tokens: Tensor
    """(B, L, G, D)."""
    position_index: NDArray[np.int64]
    """Layer or chunk index of each sequence position."""
    group_index: NDArray[np.int64]
    """Rank index of each token within a position."""
    pad: int

    @property
    def length(self) -> int:
        return int(self.tokens.shape[1])


@dataclass(frozen=True, kw_only=True)
class Tokenizer:
    kind: TokenizerKind
    length: int
    index: NDArray[np.int64]
    _inverse: NDArray[np.int64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.index.ndim != 3:
            raise ConfigurationError(f"Tokenizer index must be (L, G, D), got shape {self.index.shape}")
        flat = self.index.reshape(-1)
        valid = flat >= 0
        if np.any(flat >= self.length) or np.sort(flat[valid]).tolist() != list(range(self.length)):
            raise ConfigurationError(f"Tokenizer index does not cover the {self.length} vector entries exactly once")
        inverse = np.empty(self.length, dtype=np.int64)
        inverse[flat[valid]] = np.nonzero(valid)[0]
        object.__setattr__(self, "_inverse", inverse)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.index.shape  # type: ignore[return-value]

    @property
    def pad(self) -> int:
        return int(np.sum(self.index < 0))

    def tokenize(self, vectors: Tensor) -> TokenSeq:
        if vectors.ndim != 2 or vectors.shape[1] != self.length:
            raise ShapeMismatchError("tokenize", vectors.shape, (-1, self.length))
        padded = torch.cat([vectors, vectors.new_zeros(vectors.shape[0], 1)], dim=1)
        gather = torch.from_numpy(np.where(self.index < 0, self.length, self.index))
        positions, group, _ = self.shape
        return TokenSeq(
            tokens=padded[:, gather],
            position_index=np.arange(positions, dtype=np.int64),
            group_index=np.arange(group, dtype=np.int64),
            pad=self.pad,
        )

    def detokenize(self, tokens: Tensor) -> Tensor:
        if tuple(tokens.shape[1:]) != self.shape:
            raise ShapeMismatchError("detokenize", tokens.shape[1:], self.shape)
        return tokens.reshape(tokens.shape[0], -1)[:, torch.from_numpy(self._inverse)]

    def describe(self) -> dict:
        positions, group, width = self.shape
        return {"kind": self.kind.value, "length": self.length, "positions": positions, "group": group, "width": width}


def flat_tokenizer(length: int, chunk_size: int) -> Tokenizer:
    """Consecutive chunks of `chunk_size` entries; the last chunk is zero-padded."""
    if chunk_size < 1:
        raise ConfigurationError(f"Chunk size must be at least 1, got {chunk_size}")
    chunks = max(1, math.ceil(length / chunk_size))
    index = np.arange(chunks * chunk_size, dtype=np.int64)
    index[index >= length] = -1
    return Tokenizer(kind=TokenizerKind.FLAT_CHUNKS, length=length, index=index.reshape(chunks, 1, chunk_size))


def _vector_positions(space: ParameterSpace) -> NDArray[np.int64]:
    """Position in the representation vector of every full-layout entry, -1 for frozen entries."""
    keep = space.trainable_mask()
    positions = np.full(keep.size, -1, dtype=np.int64)
    positions[keep] = np.arange(int(keep.sum()), dtype=np.int64)
    return positions


def _offsets(space: ParameterSpace) -> dict[str, tuple[int, tuple[int, ...]]]:
    offsets, start = {}, 0
    for key, shape in space.layout():
        offsets[key] = (start, shape)
        start += math.prod(shape)
    return offsets


def _pad_rows(rows: list[NDArray[np.int64]]) -> NDArray[np.int64]:
    width = max((row.size for row in rows), default=1)
    return np.stack([np.pad(row, (0, width - row.size), constant_values=-1) for row in rows])


def matrix_tokenizer(space: ParameterSpace) -> Tokenizer:
    """One token per tensor of the layout, holding its trainable entries, zero-padded to the largest tensor."""
    positions = _vector_positions(space)
    rows = []
    for start, shape in _offsets(space).values():
        entries = positions[start : start + math.prod(shape)]
        rows.append(entries[entries >= 0])
    index = _pad_rows(rows)
    return Tokenizer(kind=TokenizerKind.PER_MATRIX, length=space.trainable_count(), index=index[:, None, :])


def lora_tokenizer(space: LoraSpace) -> Tokenizer:
    """
    One position per adapted layer with `rank` grouped tokens: token i concatenates row i of A with column i of B.
    Frozen entries are padding.
    """
    positions = _vector_positions(space)
    offsets = _offsets(space)
    layers = [key[:-2] for key, _ in space.layout() if key.endswith(".A")]
    groups = []
    for layer in layers:
        a_start, (rank, d_in) = offsets[f"{layer}.A"]
        b_start, (d_out, _) = offsets[f"{layer}.B"]
        groups.append(
            [
                np.concatenate(
                    [
                        positions[a_start + i * d_in + np.arange(d_in)],
                        positions[b_start + np.arange(d_out) * rank + i],
                    ],
                )
                for i in range(rank)
            ],
        )
    width = max(row.size for group in groups for row in group)
    index = np.stack(
        [np.stack([np.pad(row, (0, width - row.size), constant_values=-1) for row in group]) for group in groups],
    )
    return Tokenizer(kind=TokenizerKind.LORA_HIERARCHICAL, length=space.trainable_count(), index=index)


def default_tokenizer_kind(space: ParameterSpace) -> TokenizerKind:
    return TokenizerKind.LORA_HIERARCHICAL if isinstance(space, LoraSpace) else TokenizerKind.FLAT_CHUNKS


def build_tokenizer(kind: TokenizerKind | str | None, space: ParameterSpace, *, chunk_size: int = 64) -> Tokenizer:
    kind = TokenizerKind(kind) if kind else default_tokenizer_kind(space)
    match kind:
        case TokenizerKind.FLAT_CHUNKS:
            tokenizer = flat_tokenizer(space.trainable_count(), chunk_size)
        case TokenizerKind.PER_MATRIX:
            tokenizer = matrix_tokenizer(space)
        case TokenizerKind.LORA_HIERARCHICAL:
            if not isinstance(space, LoraSpace):
                raise ConfigurationError(f"The lora-hierarchical tokenizer needs a LoRA dataset, not '{space.parameterization}'")
            tokenizer = lora_tokenizer(space)
    LOGGER.debug("Tokenizer %s: %s", kind, tokenizer.describe())
    return tokenizer
