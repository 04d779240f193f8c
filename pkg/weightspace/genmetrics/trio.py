"""
Chamfer-based generation metrics between generated shapes P and reference shapes Q: minimum matching distance,
coverage and the leave-one-out 1-nearest-neighbour two-sample accuracy.
"""

__all__ = ["DistanceTrio", "distance_trio", "pairwise_chamfer", "trio_from_distances"]

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import cKDTree

from toolkit.exceptions import DegenerateInputError, ShapeMismatchError

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, kw_only=True)
class DistanceTrio:
    mmd: float
    """Minimum matching distance."""
    coverage: float
    one_nna: float


class _Cloud:
    def __init__(self, points: ArrayLike) -> None:
        self.points = np.asarray(points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3 or len(self.points) == 0:
            raise ShapeMismatchError("distance_trio", self.points.shape)
        self.tree = cKDTree(self.points)

    def mean_nearest(self, other: "_Cloud") -> float:
        distances, _ = other.tree.query(self.points, k=1)
        return float(np.mean(distances * distances))


def _chamfer(a: _Cloud, b: _Cloud) -> float:
    return a.mean_nearest(b) + b.mean_nearest(a)


def _matrix(rows: list[_Cloud], cols: list[_Cloud], *, symmetric: bool) -> NDArray[np.float64]:
    out = np.zeros((len(rows), len(cols)))
    for i, a in enumerate(rows):
        for j in range(i + 1 if symmetric else 0, len(cols)):
            out[i, j] = _chamfer(a, cols[j])
            if symmetric:
                out[j, i] = out[i, j]
    return out


def pairwise_chamfer(a: Sequence[ArrayLike], b: Sequence[ArrayLike] | None = None) -> NDArray[np.float64]:
    """Chamfer distance between every pair of clouds; within one set when `b` is omitted."""
    rows = [_Cloud(c) for c in a]
    if b is None:
        return _matrix(rows, rows, symmetric=True)
    return _matrix(rows, [_Cloud(c) for c in b], symmetric=False)


def trio_from_distances(
    gen_ref: NDArray[np.float64],
    gen_gen: NDArray[np.float64],
    ref_ref: NDArray[np.float64],
) -> DistanceTrio:
    """
    The metrics from precomputed distances. A shape is never its own neighbour, and a neighbour at equal distance
    in both sets counts as the opposite set.
    """
    n_gen, n_ref = gen_ref.shape
    if n_gen < 2 or n_ref < 2:
        raise DegenerateInputError(f"Distance metrics need at least 2 shapes per set, got {n_gen} and {n_ref}")
    min_matching = float(gen_ref.min(axis=0).mean())
    coverage = len(np.unique(gen_ref.argmin(axis=1))) / n_ref

    def own_nearest(within: NDArray[np.float64]) -> NDArray[np.float64]:
        masked = within.astype(np.float64, copy=True)
        np.fill_diagonal(masked, np.inf)
        return masked.min(axis=1)

    gen_correct = own_nearest(gen_gen) < gen_ref.min(axis=1)
    ref_correct = own_nearest(ref_ref) < gen_ref.min(axis=0)
    one_nna = (int(gen_correct.sum()) + int(ref_correct.sum())) / (n_gen + n_ref)
    return DistanceTrio(mmd=min_matching, coverage=coverage, one_nna=one_nna)


def distance_trio(generated: Sequence[ArrayLike], reference: Sequence[ArrayLike]) -> DistanceTrio:
    if len(generated) < 2 or len(reference) < 2:
        raise DegenerateInputError(
            f"Distance metrics need at least 2 shapes per set, got {len(generated)} and {len(reference)}",
        )
    gen = [_Cloud(c) for c in generated]
    ref = [_Cloud(c) for c in reference]
    LOGGER.info("Computing Chamfer distances for %d generated and %d reference shapes", len(gen), len(ref))
    return trio_from_distances(
        _matrix(gen, ref, symmetric=False),
        _matrix(gen, gen, symmetric=True),
        _matrix(ref, ref, symmetric=True),
    )
