__all__ = ["INIT_STREAM", "DatasetBuild", "build_dataset", "shared_init_code"]

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from framework.core.pool import run_indexed
from toolkit.exceptions import ConfigurationError, WeightspaceError
from weightspace.datastore import Instance, WeightDataset, WeightRecord
from weightspace.numerics import Rng, Tensor

from .configuration import FittingConfiguration, InitProtocol
from .fit import FitReport, FitResult, fit_instance
from .metrics import metric_name
from .spaces import LoraSpace, ParameterSpace

LOGGER = logging.getLogger(__name__)

INIT_STREAM: int = 0x696E6974
"""Rng stream of the shared random initialisation code."""


def shared_init_code(space: ParameterSpace, seed: int) -> NDArray[np.float32]:
    """The unit-normal code every fit of a run starts from."""
    return Rng(seed, INIT_STREAM).normal(space.code_length)


@dataclass(kw_only=True)
class DatasetBuild:
    dataset: WeightDataset
    reports: list[FitReport] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)


async def build_dataset(
    space: ParameterSpace,
    instances: Sequence[Instance],
    config: FittingConfiguration,
    *,
    seed: int,
    protocol: InitProtocol = InitProtocol.SHARED_RANDOM,
    jobs: int = 1,
) -> DatasetBuild:
    """
    Fit every instance and assemble the weight dataset in input order.

    shared-random: every fit starts from the same random init. first-instance: instance 0 is fitted from that init
    first and its fitted weights initialise all the others. Failed fits leave the dataset partial and are listed.
    """
    if protocol is InitProtocol.FIRST_INSTANCE and space.parameterization.is_lora:
        raise ConfigurationError(f"The first-instance protocol applies to MLP parameterizations, not '{space.parameterization}'")
    shared = space.initial(shared_init_code(space, seed))
    outcomes: list[FitResult | WeightspaceError] = []
    init: dict[str, Tensor] = shared

    remaining = list(range(len(instances)))
    if protocol is InitProtocol.FIRST_INSTANCE and instances:
        first = await run_indexed(lambda i: fit_instance(space, shared, instances[i], config, seed=seed, stream=i), [0])
        outcomes.extend(first)
        if isinstance(first[0], FitResult):
            init = first[0].tensors
        else:
            LOGGER.warning("First instance failed; the remaining fits start from the shared random init")
        remaining = remaining[1:]

    LOGGER.info("Fitting %d instances as %s with %d jobs", len(remaining), space.parameterization, jobs)
    outcomes.extend(
        await run_indexed(
            lambda i: fit_instance(space, init, instances[i], config, seed=seed, stream=i), remaining, jobs=jobs,
        ),
    )

    records: list[WeightRecord] = []
    reports: list[FitReport] = []
    failures: dict[str, str] = {}
    for instance, outcome in zip(instances, outcomes, strict=True):
        if isinstance(outcome, FitResult):
            records.append(
                WeightRecord(
                    instance_id=instance.id, label=instance.label, vector=outcome.vector, metric=outcome.report.metric,
                ),
            )
            reports.append(outcome.report)
        else:
            failures[instance.id] = str(outcome)
    if failures:
        LOGGER.warning("%d of %d fits failed: %s", len(failures), len(instances), ", ".join(failures))

    modality = instances[0].modality if instances else None
    dataset = WeightDataset(
        arch=space.arch.manifest(),
        arch_hash=space.arch.content_hash(),
        parameterization=space.parameterization.value,
        record_length=space.trainable_count(),
        metric_name=metric_name(modality) if modality else "metric",
        records=records,
        base_hash=space.base.content_hash() if isinstance(space, LoraSpace) else None,
        mask=space.mask.descriptor() if space.mask else None,
        settings=space.settings() | {"protocol": protocol.value, "seed": seed},
        failed=list(failures),
    )
    return DatasetBuild(dataset=dataset, reports=reports, failures=failures)
