__all__ = ["ScheduleStep", "progressive_schedule", "validate_stages"]

from collections.abc import Iterator, Sequence
from dataclasses import dataclass

from toolkit.exceptions import ConfigurationError
from weightspace.numerics import LrSchedule

from .configuration import StageConfig


@dataclass(frozen=True, kw_only=True)
class ScheduleStep:
    stage: int
    step: int
    """Global step index across all stages."""
    batch_size: int
    points: int
    lr: float


def validate_stages(stages: Sequence[StageConfig]) -> None:
    """Sampling resolution grows while the batch shrinks: batch sizes non-increasing, points non-decreasing."""
    if not stages:
        raise ConfigurationError("The progressive schedule needs at least one stage")
    for i, (previous, current) in enumerate(zip(stages, stages[1:]), start=1):
        if current.batch_size > previous.batch_size:
            raise ConfigurationError(
                f"Stage {i} batch size {current.batch_size} exceeds the previous stage's {previous.batch_size}",
            )
        if current.points < previous.points:
            raise ConfigurationError(f"Stage {i} samples {current.points} points, fewer than the previous {previous.points}")


def progressive_schedule(stages: Sequence[StageConfig], lr: LrSchedule) -> Iterator[ScheduleStep]:
    """One entry per optimizer step; the learning rate follows `lr` over the total step count."""
    validate_stages(stages)
    step = 0
    for index, stage in enumerate(stages):
        for _ in range(stage.steps):
            yield ScheduleStep(stage=index, step=step, batch_size=stage.batch_size, points=stage.points, lr=lr.rate(step))
            step += 1
