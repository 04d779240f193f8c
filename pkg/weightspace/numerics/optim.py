__all__ = ["AdamState", "adam_step", "make_adam", "make_sparse_adam", "sparse_adam_step"]

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import torch

from toolkit.exceptions import NonFiniteError, ShapeMismatchError

from .ops import Tensor
from .schedules import LrSchedule

ADAM_BETAS: tuple[float, float] = (0.9, 0.999)
ADAM_EPS: float = 1e-8


@dataclass(kw_only=True)
class AdamState:
    """Moments live inside the torch optimizer; `step` counts completed updates."""

    optimizer: torch.optim.Optimizer
    schedule: LrSchedule
    step: int = 0

    @property
    def lr(self) -> float:
        return self.schedule.rate(self.step)

    def moments(self, param: Tensor) -> tuple[Tensor, Tensor] | None:
        state = self.optimizer.state.get(param)
        if not state:
            return None
        return state["exp_avg"], state["exp_avg_sq"]


def make_adam(params: Sequence[Tensor], schedule: LrSchedule) -> AdamState:
    optimizer = torch.optim.Adam(list(params), lr=schedule.rate(0), betas=ADAM_BETAS, eps=ADAM_EPS, foreach=False)
    return AdamState(optimizer=optimizer, schedule=schedule)


def adam_step(
    state: AdamState,
    params: Sequence[Tensor],
    grads: Sequence[Tensor],
    after_step: Callable[[], None] | None = None,
) -> AdamState:
    """
    One bias-corrected Adam update at the scheduled rate. `after_step` runs without gradient tracking right after
    the update; masked fits use it to restore frozen entries.
    """
    for p, g in zip(params, grads, strict=True):
        if p.shape != g.shape:
            raise ShapeMismatchError("adam_step", p.shape, g.shape)
        if not torch.isfinite(g).all():
            raise NonFiniteError(f"Non-finite gradient at optimizer step {state.step}")
        p.grad = g.detach().clone()
    lr = state.schedule.rate(state.step)
    for group in state.optimizer.param_groups:
        group["lr"] = lr
    state.optimizer.step()
    state.optimizer.zero_grad(set_to_none=True)
    state.step += 1
    if after_step is not None:
        with torch.no_grad():
            after_step()
    return state


def make_sparse_adam(table: Tensor, schedule: LrSchedule) -> AdamState:
    optimizer = torch.optim.SparseAdam([table], lr=schedule.rate(0), betas=ADAM_BETAS, eps=ADAM_EPS)
    return AdamState(optimizer=optimizer, schedule=schedule)


def sparse_adam_step(state: AdamState, table: Tensor, grad: Tensor, rows: Tensor) -> AdamState:
    """
    Adam update of the given rows of a (rows, dim) table. Rows outside `rows` keep both their values and their
    moments, so codes of instances that are not in the batch stay where they are.
    """
    if table.shape != grad.shape:
        raise ShapeMismatchError("sparse_adam_step", table.shape, grad.shape)
    if not torch.isfinite(grad).all():
        raise NonFiniteError(f"Non-finite gradient at optimizer step {state.step}")
    rows = torch.unique(rows.to(torch.int64))
    table.grad = torch.sparse_coo_tensor(rows.unsqueeze(0), grad.detach()[rows].clone(), table.shape)
    lr = state.schedule.rate(state.step)
    for group in state.optimizer.param_groups:
        group["lr"] = lr
    state.optimizer.step()
    state.optimizer.zero_grad(set_to_none=True)
    state.step += 1
    return state
