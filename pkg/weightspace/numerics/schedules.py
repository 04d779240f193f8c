__all__ = ["LrSchedule", "ScheduleKind", "lr_schedule"]

import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum

from toolkit.exceptions import ConfigurationError


class ScheduleKind(StrEnum):
    COSINE = "cosine"
    STAGED = "staged"
    CONSTANT = "constant"


@dataclass(frozen=True, kw_only=True)
class LrSchedule:
    """
    Learning rate as a function of the optimizer step.

    cosine:   half-cosine from `start` to `end` over `total_steps`.
    staged:   geometric staircase of `stages` constant levels from `start` down to `end`.
    constant: always `start`.

    Steps past `total_steps` are clamped, so the rate never drops below `end`.
    """

    kind: ScheduleKind
    start: float
    end: float
    total_steps: int
    stages: int = 5

    def __post_init__(self) -> None:
        if not self.start >= self.end > 0:
            raise ConfigurationError(f"Learning rate schedule needs start >= end > 0, got {self.start} -> {self.end}")
        if self.total_steps < 1:
            raise ConfigurationError(f"Learning rate schedule needs total_steps >= 1, got {self.total_steps}")
        if self.kind is ScheduleKind.STAGED and self.stages < 2 and self.start != self.end:
            raise ConfigurationError("A staged schedule that decays needs at least 2 stages")

    def rate(self, step: int) -> float:
        t = min(max(step, 0), self.total_steps)
        if self.start == self.end or self.kind is ScheduleKind.CONSTANT:
            return self.start
        match self.kind:
            case ScheduleKind.COSINE:
                progress = t / self.total_steps
                return self.end + 0.5 * (self.start - self.end) * (1.0 + math.cos(math.pi * progress))
            case ScheduleKind.STAGED:
                stage = min(t * self.stages // self.total_steps, self.stages - 1)
                return self.start * (self.end / self.start) ** (stage / (self.stages - 1))
        raise ConfigurationError(f"Unknown schedule kind {self.kind}")


def lr_schedule(
    kind: ScheduleKind | str,
    start: float,
    end: float,
    total_steps: int,
    stages: int = 5,
) -> Callable[[int], float]:
    return LrSchedule(kind=ScheduleKind(kind), start=start, end=end, total_steps=total_steps, stages=stages).rate
