__all__ = [
    "NEAR_SURFACE_FRACTION",
    "SDF_CLAMP",
    "CoordBatch",
    "SamplingStrategy",
    "instance_targets",
    "sample_coords",
]

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray

from toolkit.exceptions import ConfigurationError
from weightspace.datastore import ImageInstance, Instance, SdfInstance, pixel_centers
from weightspace.numerics import Rng

NEAR_SURFACE_FRACTION: float = 0.5
NEAR_SURFACE_STD: float = 0.02
SDF_CLAMP: float = 0.1
"""SDF targets are clamped to [-SDF_CLAMP, SDF_CLAMP] before the reconstruction loss."""
_PROJECTION_STEPS = 3
_GRADIENT_STEP = 1e-4


class SamplingStrategy(StrEnum):
    UNIFORM = "uniform"
    GRID = "grid"
    MIXED = "mixed"


@dataclass(frozen=True, kw_only=True)
class CoordBatch:
    points: NDArray[np.float32]
    """(count, n) in [-1, 1]^n."""
    pixel_index: NDArray[np.int64] | None = None
    """Row-major pixel of every point, for image batches."""
    near_surface: NDArray[np.bool_] | None = None
    """Which SDF points were drawn near the surface."""

    def __len__(self) -> int:
        return int(self.points.shape[0])


def _sdf_gradient(instance: SdfInstance, points: NDArray[np.float64]) -> NDArray[np.float64]:
    gradient = np.empty_like(points)
    for axis in range(points.shape[1]):
        offset = np.zeros(points.shape[1])
        offset[axis] = _GRADIENT_STEP
        gradient[:, axis] = (instance.values(points + offset) - instance.values(points - offset)) / (2 * _GRADIENT_STEP)
    return gradient


def _near_surface(instance: SdfInstance, count: int, rng: Rng) -> NDArray[np.float64]:
    """Uniform points pulled onto the zero level set by a few projection steps, then jittered."""
    points = rng.uniform(-1.0, 1.0, (count, 3)).astype(np.float64)
    for _ in range(_PROJECTION_STEPS):
        gradient = _sdf_gradient(instance, points)
        norm = np.maximum(np.linalg.norm(gradient, axis=1, keepdims=True), 1e-8)
        points = points - instance.values(points)[:, None] * gradient / norm
    points = points + rng.normal((count, 3), std=NEAR_SURFACE_STD)
    return np.clip(points, -1.0, 1.0)


def sample_coords(
    instance: Instance,
    count: int,
    rng: Rng,
    strategy: SamplingStrategy | str | None = None,
) -> CoordBatch:
    """
    Coordinates to supervise a fit with.

    Images: `uniform` draws pixel centers with replacement, `grid` returns every pixel center (count must be H*W).
    SDFs: `uniform` draws in the cube; `mixed` (the default) draws each point near the surface with probability
    NEAR_SURFACE_FRACTION and uniformly otherwise.
    """
    if count < 1:
        raise ConfigurationError(f"Cannot sample {count} coordinates")
    if isinstance(instance, ImageInstance):
        strategy = SamplingStrategy(strategy or SamplingStrategy.UNIFORM)
        height, width, _ = instance.shape
        centers = pixel_centers(height, width)
        match strategy:
            case SamplingStrategy.GRID:
                if count != height * width:
                    raise ConfigurationError(f"Grid sampling covers {height * width} pixels, asked for {count}")
                index = np.arange(count, dtype=np.int64)
            case SamplingStrategy.UNIFORM:
                index = rng.integers(height * width, count)
            case _:
                raise ConfigurationError(f"Sampling strategy '{strategy}' does not apply to images")
        return CoordBatch(points=centers[index], pixel_index=index)

    strategy = SamplingStrategy(strategy or SamplingStrategy.MIXED)
    match strategy:
        case SamplingStrategy.UNIFORM:
            return CoordBatch(points=rng.uniform(-1.0, 1.0, (count, 3)), near_surface=np.zeros(count, dtype=bool))
        case SamplingStrategy.MIXED:
            near = rng.generator.random(count) < NEAR_SURFACE_FRACTION
            points = rng.uniform(-1.0, 1.0, (count, 3)).astype(np.float64)
            if near.any():
                points[near] = _near_surface(instance, int(near.sum()), rng)
            return CoordBatch(points=points.astype(np.float32), near_surface=near)
    raise ConfigurationError(f"Sampling strategy '{strategy}' does not apply to SDFs")


def instance_targets(instance: Instance, batch: CoordBatch) -> NDArray[np.float32]:
    """Ground-truth signal at the batch coordinates: pixel values, or clamped signed distances as a column."""
    if isinstance(instance, ImageInstance):
        if batch.pixel_index is None:
            raise ConfigurationError("Image targets need pixel-aligned coordinates")
        return instance.targets()[batch.pixel_index]
    values = np.clip(instance.values(batch.points), -SDF_CLAMP, SDF_CLAMP)
    return values.astype(np.float32)[:, None]
