"""
Structure of the fitted weight space: how far apart two fits of the same instance land when their initialisations
are perturbed, and whether the straight line between them stays a good fit.
"""

__all__ = [
    "PERTURB_STREAM",
    "BarrierResult",
    "PerturbPair",
    "PerturbationRow",
    "cosine_similarity",
    "lmc_barrier",
    "perturb_init",
    "perturbation_experiment",
    "perturbation_pairs",
]

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from framework.core.pool import run_indexed
from toolkit.exceptions import ConfigurationError, DegenerateInputError, ShapeMismatchError, WeightspaceError
from weightspace.datastore import Instance
from weightspace.fitting import FitResult, FittingConfiguration, ParameterSpace, reconstruction_error, shared_init_code
from weightspace.fitting.fit import fit_instance
from weightspace.numerics import Rng

LOGGER = logging.getLogger(__name__)

PERTURB_STREAM: int = 0x70657274
"""Base Rng stream of the perturbation codes; instance i draws from PERTURB_STREAM + i."""


def perturb_init(code: ArrayLike, other: ArrayLike, lam: float) -> NDArray[np.float32]:
    """sqrt(1 - lam^2) * code + lam * other. Unit-normal inputs give unit-normal outputs."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigurationError(f"Perturbation strength must lie in [0, 1], got {lam}")
    a = np.asarray(code, dtype=np.float32)
    b = np.asarray(other, dtype=np.float32)
    if a.shape != b.shape:
        raise ShapeMismatchError("perturb_init", a.shape, b.shape)
    if lam == 0.0:
        return a.copy()
    if lam == 1.0:
        return b.copy()
    return (np.float32(math.sqrt(1.0 - lam * lam)) * a + np.float32(lam) * b).astype(np.float32)


def cosine_similarity(a: ArrayLike, b: ArrayLike) -> float:
    u = np.asarray(a, dtype=np.float64).reshape(-1)
    v = np.asarray(b, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise ShapeMismatchError("cosine_similarity", u.shape, v.shape)
    norms = np.linalg.norm(u) * np.linalg.norm(v)
    if norms == 0.0:
        raise DegenerateInputError("Cosine similarity of a zero vector is undefined")
    return float(np.clip(u @ v / norms, -1.0, 1.0))


@dataclass(frozen=True, kw_only=True)
class BarrierResult:
    value: float
    flagged: bool = False
    """The midpoint field had no surface; `value` is the empty-mesh sentinel."""


def lmc_barrier(
    space: ParameterSpace,
    phi: NDArray[np.floating],
    phi_other: NDArray[np.floating],
    instance: Instance,
    *,
    resolution: int = 64,
    samples: int = 2048,
    seed: int = 0,
) -> BarrierResult:
    """Reconstruction error of the fit at the midpoint of two representations of the same instance."""
    if phi.shape != phi_other.shape:
        raise ShapeMismatchError("lmc_barrier", phi.shape, phi_other.shape)
    midpoint = ((np.asarray(phi, dtype=np.float64) + phi_other) / 2.0).astype(np.float32)
    error = reconstruction_error(
        space, space.unflatten(midpoint), instance, resolution=resolution, samples=samples, seed=seed,
    )
    return BarrierResult(value=error.value, flagged=error.empty_mesh)


@dataclass(frozen=True, kw_only=True)
class PerturbPair:
    instance_id: str
    lam: float
    phi: NDArray[np.float32]
    phi_perturbed: NDArray[np.float32]
    similarity: float
    barrier: BarrierResult


@dataclass(frozen=True, kw_only=True)
class PerturbationRow:
    parameterization: str
    lam: float
    trials: int
    similarity_mean: float
    similarity_std: float
    barrier_mean: float
    barrier_std: float
    flagged: int
    """Pairs whose midpoint mesh was empty."""


def perturbation_pairs(
    space: ParameterSpace,
    instance: Instance,
    lambdas: Sequence[float],
    config: FittingConfiguration,
    *,
    seed: int,
    index: int,
    barrier_resolution: int = 64,
) -> list[PerturbPair]:
    """
    Fit the instance once from the shared init and once per lambda from the perturbed init. Both fits of a pair use
    the same coordinate stream, so lambda = 0 reproduces the unperturbed fit exactly.
    """
    code = shared_init_code(space, seed)
    other = Rng(seed, PERTURB_STREAM + index).normal(space.code_length)
    reference: FitResult = fit_instance(space, space.initial(code), instance, config, seed=seed, stream=index)
    pairs = []
    for lam in lambdas:
        perturbed_code = perturb_init(code, other, lam)
        if np.array_equal(perturbed_code, code):
            perturbed = reference
        else:
            perturbed = fit_instance(space, space.initial(perturbed_code), instance, config, seed=seed, stream=index)
        barrier = lmc_barrier(
            space,
            reference.vector,
            perturbed.vector,
            instance,
            resolution=barrier_resolution,
            samples=config.metric_samples,
            seed=seed,
        )
        pairs.append(
            PerturbPair(
                instance_id=instance.id,
                lam=lam,
                phi=reference.vector,
                phi_perturbed=perturbed.vector,
                similarity=cosine_similarity(reference.vector, perturbed.vector),
                barrier=barrier,
            ),
        )
    return pairs


async def perturbation_experiment(
    spaces: Sequence[ParameterSpace],
    instances: Sequence[Instance],
    lambdas: Sequence[float],
    config: FittingConfiguration,
    *,
    seed: int,
    trials: int,
    barrier_resolution: int = 64,
    jobs: int = 1,
) -> list[PerturbationRow]:
    """One row per (parameterization, lambda) with mean and std over the first `trials` instances."""
    if trials < 2:
        raise ConfigurationError(f"The perturbation experiment needs at least 2 trials, got {trials}")
    if len(instances) < trials:
        raise ConfigurationError(f"{trials} trials requested but only {len(instances)} instances are available")
    for lam in lambdas:
        if not 0.0 <= lam <= 1.0:
            raise ConfigurationError(f"Perturbation strength must lie in [0, 1], got {lam}")
    chosen = list(instances[:trials])

    rows: list[PerturbationRow] = []
    for space in spaces:
        LOGGER.info("Perturbation pairs for %s: %d instances x %d lambdas", space.parameterization, trials, len(lambdas))
        outcomes = await run_indexed(
            lambda i, space=space: perturbation_pairs(
                space, chosen[i], lambdas, config, seed=seed, index=i, barrier_resolution=barrier_resolution,
            ),
            list(range(trials)),
            jobs=jobs,
        )
        completed = [outcome for outcome in outcomes if not isinstance(outcome, WeightspaceError)]
        if len(completed) < len(outcomes):
            LOGGER.warning("%d of %d perturbation trials failed for %s", len(outcomes) - len(completed), trials, space.parameterization)
        for position, lam in enumerate(lambdas):
            similarities = np.asarray([pairs[position].similarity for pairs in completed], dtype=np.float64)
            barriers = np.asarray([pairs[position].barrier.value for pairs in completed], dtype=np.float64)
            rows.append(
                PerturbationRow(
                    parameterization=space.parameterization.value,
                    lam=lam,
                    trials=len(completed),
                    similarity_mean=float(similarities.mean()) if completed else math.nan,
                    similarity_std=float(similarities.std()) if completed else math.nan,
                    barrier_mean=float(barriers.mean()) if completed else math.nan,
                    barrier_std=float(barriers.std()) if completed else math.nan,
                    flagged=sum(pairs[position].barrier.flagged for pairs in completed),
                ),
            )
    return rows
