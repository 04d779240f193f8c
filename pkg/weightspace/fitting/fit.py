__all__ = ["FitReport", "FitResult", "fit_instance"]

import logging
from dataclasses import dataclass, field

import numpy as np
import torch
from numpy.typing import NDArray

from toolkit.exceptions import FitDivergedError, NonFiniteError
from toolkit.logging_tools import PROGRESS_LOGGER
from weightspace.datastore import Instance
from weightspace.numerics import LrSchedule, Rng, Tensor, adam_step, backward, make_adam, mse

from .configuration import FittingConfiguration
from .metrics import metric_name, reconstruction_score
from .sampling import instance_targets, sample_coords
from .spaces import ParameterSpace

LOGGER = logging.getLogger(__name__)
PROGRESS = logging.getLogger(PROGRESS_LOGGER)

RETRY_LR_FACTOR: float = 0.1


@dataclass(frozen=True, kw_only=True)
class FitReport:
    instance_id: str
    metric_name: str
    metric: float
    losses: list[float] = field(default_factory=list)
    """Mean loss over each window of `log_every` steps."""
    lr_start: float
    retried: bool = False
    empty_mesh: bool = False


@dataclass(frozen=True, kw_only=True)
class FitResult:
    vector: NDArray[np.float32]
    tensors: dict[str, Tensor]
    report: FitReport


def _optimize(
    space: ParameterSpace,
    init: dict[str, Tensor],
    instance: Instance,
    config: FittingConfiguration,
    rng: Rng,
    lr_start: float,
) -> tuple[dict[str, Tensor], list[float]]:
    tensors = {key: value.detach().clone().requires_grad_(True) for key, value in init.items()}
    params = list(tensors.values())
    schedule = LrSchedule(
        kind=config.schedule, start=lr_start, end=min(config.lr_end, lr_start), total_steps=config.steps,
    )
    state = make_adam(params, schedule)
    window: list[float] = []
    curve: list[float] = []
    for step in range(config.steps):
        batch = sample_coords(instance, config.points, rng, config.strategy)
        targets = torch.from_numpy(instance_targets(instance, batch))
        loss = mse(space.forward(tensors, torch.from_numpy(batch.points)), targets)
        if not torch.isfinite(loss):
            raise NonFiniteError(f"Non-finite loss at step {step}")
        adam_step(state, params, backward(loss, params), after_step=lambda: space.mask.apply(tensors))
        window.append(float(loss))
        if len(window) == config.log_every or step == config.steps - 1:
            curve.append(float(np.mean(window)))
            PROGRESS.debug("fit %s step %d lr %.3g loss %.6g", instance.id, step + 1, state.lr, curve[-1])
            window.clear()
    return {key: value.detach() for key, value in tensors.items()}, curve


def fit_instance(
    space: ParameterSpace,
    init: dict[str, Tensor],
    instance: Instance,
    config: FittingConfiguration,
    *,
    seed: int,
    stream: int,
) -> FitResult:
    """
    Fit one instance starting from `init`. Coordinates come from Rng(seed, stream), so a fit is a pure function of
    its inputs. A diverging fit is retried once at a tenth of the learning rate before it is reported as failed.
    """
    lr_start = config.lr_start
    retried = False
    try:
        tensors, curve = _optimize(space, init, instance, config, Rng(seed, stream), lr_start)
    except NonFiniteError as e:
        LOGGER.warning("Fit of '%s' diverged (%s); retrying at lr/10", instance.id, e)
        lr_start *= RETRY_LR_FACTOR
        retried = True
        try:
            tensors, curve = _optimize(space, init, instance, config, Rng(seed, stream), lr_start)
        except NonFiniteError as again:
            raise FitDivergedError(instance.id, str(again)) from again

    score = reconstruction_score(
        space,
        tensors,
        instance,
        resolution=config.metric_resolution,
        samples=config.metric_samples,
        seed=seed,
    )
    report = FitReport(
        instance_id=instance.id,
        metric_name=metric_name(instance.modality),
        metric=score.value,
        losses=curve,
        lr_start=lr_start,
        retried=retried,
        empty_mesh=score.empty_mesh,
    )
    LOGGER.debug("Fitted '%s' (%s): %s %.4f", instance.id, space.parameterization, report.metric_name, report.metric)
    return FitResult(vector=space.flatten(tensors), tensors=tensors, report=report)
