"""
Chamfer distance between point sets: the mean squared distance from each point of one set to its nearest neighbour
in the other, summed over both directions.
"""

__all__ = ["CHAMFER_CONVENTION", "SURFACE_SAMPLES", "chamfer", "chamfer_brute_force", "nearest_squared_distances"]

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import cKDTree

from toolkit.exceptions import DegenerateInputError, ShapeMismatchError

CHAMFER_CONVENTION: str = "mean squared nearest distance, summed over both directions"
SURFACE_SAMPLES: int = 2048
"""Surface points drawn per shape for every Chamfer evaluation."""


def _cloud(points: ArrayLike) -> NDArray[np.float64]:
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    if array.ndim != 2 or len(array) == 0:
        raise DegenerateInputError(f"Chamfer distance needs a non-empty (n, d) point set, got shape {array.shape}")
    return array


def nearest_squared_distances(source: ArrayLike, target: ArrayLike) -> NDArray[np.float64]:
    """Squared distance from every source point to its nearest target point."""
    src, dst = _cloud(source), _cloud(target)
    if src.shape[1] != dst.shape[1]:
        raise ShapeMismatchError("chamfer", src.shape, dst.shape)
    _, index = cKDTree(dst).query(src, k=1)
    diff = src - dst[index]
    return np.sum(diff * diff, axis=-1)


def chamfer(a: ArrayLike, b: ArrayLike) -> float:
    return float(nearest_squared_distances(a, b).mean() + nearest_squared_distances(b, a).mean())


def chamfer_brute_force(a: ArrayLike, b: ArrayLike) -> float:
    """O(n m) reference evaluation."""
    src, dst = _cloud(a), _cloud(b)
    if src.shape[1] != dst.shape[1]:
        raise ShapeMismatchError("chamfer", src.shape, dst.shape)
    diff = src[:, None, :] - dst[None, :, :]
    squared = np.sum(diff * diff, axis=-1)
    return float(squared.min(axis=1).mean() + squared.min(axis=0).mean())
