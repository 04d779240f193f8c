__all__ = ["DEFAULT_RESOLUTION", "Grid", "lattice_points", "sample_field_to_grid"]

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import RegularGridInterpolator

from toolkit.exceptions import ConfigurationError, DegenerateInputError

LOGGER = logging.getLogger(__name__)

DEFAULT_RESOLUTION: int = 64
"""Lattice resolution used for barriers, fit metrics and generation metrics."""

CHUNK_SIZE: int = 65_536

FieldFn = Callable[[NDArray[np.float32]], ArrayLike]


@dataclass(frozen=True, kw_only=True)
class Grid:
    """
    Scalar samples on a regular lattice over [lower, upper]^n, including the domain corners.
    `values[i, j, ...]` is the sample at (x_i, y_j, ...).
    """

    values: NDArray[np.float64]
    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self) -> None:
        if any(size < 2 for size in self.values.shape):
            raise ConfigurationError(f"Grid resolution must be at least 2 per axis, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DegenerateInputError("Grid values must be finite")

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def resolution(self) -> tuple[int, ...]:
        return tuple(self.values.shape)

    @property
    def spacing(self) -> NDArray[np.float64]:
        return (self.upper - self.lower) / (np.asarray(self.resolution, dtype=np.float64) - 1.0)

    def axes(self) -> list[NDArray[np.float64]]:
        return [np.linspace(self.lower, self.upper, size) for size in self.resolution]

    def to_world(self, index: NDArray[np.floating]) -> NDArray[np.float64]:
        """Fractional lattice indices to domain coordinates."""
        return self.lower + np.asarray(index, dtype=np.float64) * self.spacing

    def interpolate(self, points: ArrayLike) -> NDArray[np.float64]:
        """Multilinear interpolation of the lattice values."""
        interpolator = RegularGridInterpolator(self.axes(), self.values, method="linear")
        return interpolator(np.clip(np.asarray(points, dtype=np.float64), self.lower, self.upper))


def lattice_points(resolution: tuple[int, ...], lower: float = -1.0, upper: float = 1.0) -> NDArray[np.float32]:
    """All lattice points in C order of the grid ("ij" indexing), shape (prod(resolution), n)."""
    axes = [np.linspace(lower, upper, size) for size in resolution]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1).astype(np.float32)


def sample_field_to_grid(
    field: FieldFn,
    resolution: int | tuple[int, ...],
    *,
    dim: int = 3,
    lower: float = -1.0,
    upper: float = 1.0,
    chunk_size: int = CHUNK_SIZE,
) -> Grid:
    """
    Evaluate `field` (a batch of points (m, n) to m scalars) on a regular lattice. Chunks are evaluated in order and
    written back by position, so the result does not depend on the chunk size.
    """
    shape = (resolution,) * dim if isinstance(resolution, int) else tuple(resolution)
    if any(size < 2 for size in shape):
        raise ConfigurationError(f"Grid resolution must be at least 2 per axis, got {shape}")
    points = lattice_points(shape, lower, upper)
    values = np.empty(points.shape[0], dtype=np.float64)
    for start in range(0, points.shape[0], chunk_size):
        stop = min(start + chunk_size, points.shape[0])
        values[start:stop] = np.asarray(field(points[start:stop]), dtype=np.float64).reshape(-1)
    LOGGER.debug("Sampled field on a %s lattice", "x".join(map(str, shape)))
    return Grid(values=values.reshape(shape), lower=lower, upper=upper)
