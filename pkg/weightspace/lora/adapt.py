"""
Low-rank adaptation algebra.

Additive:        W' = W + B A
Multiplicative:  W' = W * (B A)  (elementwise), which decomposes into sum_i diag(b_i) W diag(a_i) with a_i the
                 i-th row of A and b_i the i-th column of B. Every term only rescales rows and columns of W, so the
                 zero pattern of W survives and reordering the rank components leaves W' unchanged.
"""

__all__ = [
    "LoraMode",
    "adapt_weight",
    "apply_additive",
    "apply_multiplicative",
    "decompose_multiplicative",
    "decomposition_terms",
    "rank_of",
]

from enum import StrEnum

import torch

from toolkit.exceptions import ShapeMismatchError
from weightspace.numerics import Tensor


class LoraMode(StrEnum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


def _check_factors(op: str, weight: Tensor, a: Tensor, b: Tensor) -> None:
    if a.shape[0] != b.shape[-1]:
        raise ShapeMismatchError(f"{op}: rank", a.shape, b.shape)
    if (b.shape[-2], a.shape[-1]) != tuple(weight.shape[-2:]):
        raise ShapeMismatchError(op, weight.shape, (b.shape[-2], a.shape[-1]))


def apply_additive(weight: Tensor, a: Tensor, b: Tensor) -> Tensor:
    _check_factors("apply_additive", weight, a, b)
    return weight + b @ a


def apply_multiplicative(weight: Tensor, a: Tensor, b: Tensor) -> Tensor:
    _check_factors("apply_multiplicative", weight, a, b)
    return weight * (b @ a)


def decomposition_terms(weight: Tensor, a: Tensor, b: Tensor) -> Tensor:
    """The rank-wise terms diag(b_i) W diag(a_i), stacked as (r, d_out, d_in)."""
    _check_factors("decompose_multiplicative", weight, a, b)
    return b.T.unsqueeze(-1) * weight.unsqueeze(0) * a.unsqueeze(1)


def decompose_multiplicative(weight: Tensor, a: Tensor, b: Tensor) -> Tensor:
    return decomposition_terms(weight, a, b).sum(dim=0)


def adapt_weight(mode: LoraMode, weight: Tensor, a: Tensor, b: Tensor) -> Tensor:
    match mode:
        case LoraMode.ADDITIVE:
            return apply_additive(weight, a, b)
        case LoraMode.MULTIPLICATIVE:
            return apply_multiplicative(weight, a, b)
    raise ValueError(f"Unknown LoRA mode {mode}")


def rank_of(delta: Tensor, tol: float = 1e-4) -> int:
    """Numerical rank: singular values above `tol` times the largest one."""
    singular = torch.linalg.svdvals(delta.to(torch.float64))
    if singular.numel() == 0 or singular[0] == 0:
        return 0
    return int((singular > tol * singular[0]).sum())
