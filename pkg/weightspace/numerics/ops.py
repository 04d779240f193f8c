"""
Shape-checked primitive operations.

torch records every operation on a tensor with `requires_grad` in its define-by-run graph, which is rebuilt on
each forward pass. The wrappers here only add the conformance checks so that a mismatch names the operation and
both shapes instead of surfacing as a broadcasting surprise three layers later.
"""

__all__ = ["Tensor", "add", "matmul", "mean", "mse", "mul", "norm", "reduce_sum", "relu", "sin"]

from typing import TypeAlias

import torch

from toolkit.exceptions import ShapeMismatchError

Tensor: TypeAlias = torch.Tensor


def _check_elementwise(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape == b.shape or a.ndim == 0 or b.ndim == 0:
        return
    # broadcasting over a leading batch dimension only
    if a.shape[1:] == b.shape or b.shape[1:] == a.shape:
        return
    raise ShapeMismatchError(op, a.shape, b.shape)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 1 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    return torch.matmul(a, b)


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise("add", a, b)
    return a + b


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise("mul", a, b)
    return a * b


def relu(x: Tensor) -> Tensor:
    return torch.relu(x)


def sin(x: Tensor) -> Tensor:
    return torch.sin(x)


def reduce_sum(x: Tensor) -> Tensor:
    return x.sum()


def mean(x: Tensor) -> Tensor:
    return x.mean()


def mse(prediction: Tensor, target: Tensor) -> Tensor:
    if prediction.shape != target.shape:
        raise ShapeMismatchError("mse", prediction.shape, target.shape)
    return torch.mean((prediction - target) ** 2)


def norm(x: Tensor) -> Tensor:
    """Euclidean norm over all entries."""
    return torch.sqrt(torch.sum(x * x))
