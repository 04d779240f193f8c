"""
Linear-beta noise schedule with timesteps t = 1..T. `alpha_bar(t)` is the product of alpha_1..alpha_t, so
alpha_bar(1) == alpha_1, and alpha_bar(0) is taken as 1 (the clean data).
"""

__all__ = ["NoiseSchedule", "ddim_step", "ddim_timesteps", "forward_diffuse"]

import math
from dataclasses import dataclass

import numpy as np
import torch
from numpy.typing import NDArray

from toolkit.exceptions import ConfigurationError, ShapeMismatchError
from weightspace.numerics import Tensor


@dataclass(frozen=True, kw_only=True)
class NoiseSchedule:
    betas: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.betas.ndim != 1 or self.betas.size < 2:
            raise ConfigurationError(f"A noise schedule needs at least 2 timesteps, got {self.betas.size}")
        if not np.all((self.betas > 0.0) & (self.betas < 1.0)):
            raise ConfigurationError("Every beta must lie in (0, 1)")

    @classmethod
    def linear(cls, timesteps: int, beta_start: float, beta_end: float) -> "NoiseSchedule":
        if timesteps < 2:
            raise ConfigurationError(f"A noise schedule needs at least 2 timesteps, got {timesteps}")
        if not 0.0 < beta_start < beta_end < 1.0:
            raise ConfigurationError(f"Linear schedule needs 0 < beta_start < beta_end < 1, got {beta_start}, {beta_end}")
        return cls(betas=np.linspace(beta_start, beta_end, timesteps, dtype=np.float64))

    @property
    def timesteps(self) -> int:
        return int(self.betas.size)

    @property
    def alphas(self) -> NDArray[np.float64]:
        return 1.0 - self.betas

    @property
    def alpha_bars(self) -> NDArray[np.float64]:
        """alpha_bar(t) at index t - 1."""
        return np.cumprod(self.alphas)

    def alpha_bar(self, t: int) -> float:
        if t == 0:
            return 1.0
        self.check(np.asarray([t]))
        return float(self.alpha_bars[t - 1])

    def check(self, t: NDArray[np.integer]) -> None:
        if np.any(t < 1) or np.any(t > self.timesteps):
            raise ConfigurationError(f"Timesteps must lie in [1, {self.timesteps}]")


def forward_diffuse(phi0: Tensor, t: Tensor, eps: Tensor, schedule: NoiseSchedule) -> Tensor:
    """phi_t = sqrt(alpha_bar(t)) phi_0 + sqrt(1 - alpha_bar(t)) eps, one timestep per row."""
    if phi0.shape != eps.shape:
        raise ShapeMismatchError("forward_diffuse", phi0.shape, eps.shape)
    steps = np.asarray(t.detach().cpu().numpy(), dtype=np.int64).reshape(-1)
    schedule.check(steps)
    if steps.size != phi0.shape[0]:
        raise ShapeMismatchError("forward_diffuse", (steps.size,), (phi0.shape[0],))
    alpha_bar = torch.from_numpy(schedule.alpha_bars[steps - 1]).to(phi0.dtype).reshape(-1, *([1] * (phi0.ndim - 1)))
    return alpha_bar.sqrt() * phi0 + (1.0 - alpha_bar).sqrt() * eps


def ddim_timesteps(timesteps: int, steps: int) -> list[int]:
    """`steps` distinct timesteps from T down to 1, evenly spaced."""
    if not 1 <= steps <= timesteps:
        raise ConfigurationError(f"DDIM needs 1 <= steps <= {timesteps}, got {steps}")
    if steps == 1:
        return [timesteps]
    grid = np.floor(np.linspace(timesteps, 1, steps) + 0.5).astype(np.int64)
    return [int(t) for t in grid]


def ddim_step(x_t: Tensor, eps_hat: Tensor, t: int, t_prev: int, schedule: NoiseSchedule) -> Tensor:
    """Deterministic (eta = 0) DDIM update from t to t_prev; t_prev = 0 returns the predicted clean sample."""
    alpha_bar = schedule.alpha_bar(t)
    alpha_bar_prev = schedule.alpha_bar(t_prev)
    x0 = (x_t - math.sqrt(1.0 - alpha_bar) * eps_hat) / math.sqrt(alpha_bar)
    if t_prev == 0:
        return x0
    return math.sqrt(alpha_bar_prev) * x0 + math.sqrt(1.0 - alpha_bar_prev) * eps_hat
