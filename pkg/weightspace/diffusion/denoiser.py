"""
Transformer noise predictor over tokenized representations.

Hierarchical LoRA tokens (the rank components of one layer, a single one at rank 1) first pass a layer
encoder: projection, rank positional embedding, multi-head attention across the group and mean pooling into one
layer token. The sequence then gets a position embedding and the sinusoidal timestep embedding on every
token, runs through a pre-norm transformer encoder, and a zero-initialised head maps each position back to its
token group.
"""

__all__ = ["Denoiser", "LayerEncoder", "denoise_predict", "sinusoidal_embedding"]

import math

import torch
from torch import nn

from toolkit.exceptions import ShapeMismatchError
from weightspace.numerics import Tensor

from .configuration import TokenizerKind
from .tokenizers import Tokenizer

MAX_PERIOD: float = 10_000.0
POSITION_INIT_STD: float = 0.02


def sinusoidal_embedding(t: Tensor, dim: int, max_period: float = MAX_PERIOD) -> Tensor:
    """(B,) timesteps to (B, dim) features: cosines then sines over geometrically spaced frequencies."""
    half = dim // 2
    frequencies = torch.exp(-math.log(max_period) * torch.arange(half, dtype=torch.float32) / max(half, 1))
    angles = t.float().reshape(-1, 1) * frequencies.reshape(1, -1)
    embedding = torch.cat([torch.cos(angles), torch.sin(angles)], dim=1)
    if dim % 2:
        embedding = torch.cat([embedding, torch.zeros_like(embedding[:, :1])], dim=1)
    return embedding


class LayerEncoder(nn.Module):
    """Aggregates the `group` tokens of one position into a single d_model token; attention uses one head per token."""

    def __init__(self, width: int, group: int, d_model: int) -> None:
        super().__init__()
        inner = group * max(1, math.ceil(d_model / group))
        self.project = nn.Linear(width, inner)
        self.rank_embedding = nn.Parameter(torch.zeros(group, inner))
        nn.init.normal_(self.rank_embedding, std=POSITION_INIT_STD)
        self.norm = nn.LayerNorm(inner)
        self.attention = nn.MultiheadAttention(inner, group, batch_first=True)
        self.out = nn.Linear(inner, d_model)

    def forward(self, tokens: Tensor) -> Tensor:
        batch, positions, group, _ = tokens.shape
        h = (self.project(tokens) + self.rank_embedding).reshape(batch * positions, group, -1)
        q = self.norm(h)
        attended, _ = self.attention(q, q, q, need_weights=False)
        pooled = (h + attended).mean(dim=1)
        return self.out(pooled).reshape(batch, positions, -1)


class Denoiser(nn.Module):
    def __init__(self, tokenizer: Tokenizer, *, d_model: int, depth: int, heads: int) -> None:
        super().__init__()
        self.tokenizer = tokenizer
        positions, group, width = tokenizer.shape
        self.d_model = d_model
        self.encoder: nn.Module = (
            LayerEncoder(width, group, d_model)
            if tokenizer.kind is TokenizerKind.LORA_HIERARCHICAL
            else nn.Linear(width, d_model)
        )
        self.position_embedding = nn.Parameter(torch.zeros(1, positions, d_model))
        nn.init.normal_(self.position_embedding, std=POSITION_INIT_STD)
        self.time_mlp = nn.Sequential(nn.Linear(d_model, d_model), nn.SiLU(), nn.Linear(d_model, d_model))
        layer = nn.TransformerEncoderLayer(
            d_model,
            heads,
            dim_feedforward=4 * d_model,
            dropout=0.0,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.transformer = nn.TransformerEncoder(layer, depth, enable_nested_tensor=False)
        self.norm = nn.LayerNorm(d_model)
        self.head = nn.Linear(d_model, group * width)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, x_t: Tensor, t: Tensor) -> Tensor:
        seq = self.tokenizer.tokenize(x_t)
        tokens = seq.tokens if isinstance(self.encoder, LayerEncoder) else seq.tokens.squeeze(2)
        h = self.encoder(tokens) + self.position_embedding
        h = h + self.time_mlp(sinusoidal_embedding(t, self.d_model).to(h.dtype)).unsqueeze(1)
        h = self.norm(self.transformer(h))
        out = self.head(h).reshape(seq.tokens.shape)
        return self.tokenizer.detokenize(out)


def denoise_predict(model: Denoiser, x_t: Tensor, t: Tensor) -> Tensor:
    """Predicted noise, one row per representation."""
    if t.shape != (x_t.shape[0],):
        raise ShapeMismatchError("denoise_predict", t.shape, (x_t.shape[0],))
    return model(x_t, t)
