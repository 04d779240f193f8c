__all__ = ["backward", "central_difference", "relative_error"]

from collections.abc import Callable, Sequence

import torch

from toolkit.exceptions import ShapeMismatchError

from .ops import Tensor


def backward(loss: Tensor, leaves: Sequence[Tensor]) -> list[Tensor]:
    """
    Reverse-mode pass from a scalar loss to each leaf. Leaves the loss does not depend on get a zero gradient.
    """
    if loss.numel() != 1:
        raise ShapeMismatchError("backward", loss.shape, ())
    grads = torch.autograd.grad(loss.reshape(()), list(leaves), allow_unused=True)
    return [torch.zeros_like(leaf) if g is None else g for leaf, g in zip(leaves, grads, strict=True)]


def central_difference(fn: Callable[[Tensor], Tensor], x: Tensor, step: float = 1e-3) -> Tensor:
    """
    Numerical gradient of a scalar function by central differences, evaluated entry by entry in float64.
    """
    base = x.detach().to(torch.float64).clone()
    grad = torch.zeros_like(base)
    flat = base.view(-1)
    flat_grad = grad.view(-1)
    with torch.no_grad():
        for i in range(flat.numel()):
            original = flat[i].item()
            flat[i] = original + step
            upper = float(fn(base))
            flat[i] = original - step
            lower = float(fn(base))
            flat[i] = original
            flat_grad[i] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(analytic: Tensor, numeric: Tensor, floor: float = 1e-6) -> float:
    a = analytic.detach().to(torch.float64)
    n = numeric.detach().to(torch.float64)
    scale = max(float(torch.linalg.vector_norm(a)), float(torch.linalg.vector_norm(n)), floor)
    return float(torch.linalg.vector_norm(a - n)) / scale
