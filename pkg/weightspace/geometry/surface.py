__all__ = ["DEGENERATE_AREA", "Mesh", "PointCloud", "sample_surface", "triangle_areas"]

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from toolkit.exceptions import DegenerateInputError, ShapeMismatchError
from weightspace.numerics import Rng

DEGENERATE_AREA: float = 1e-12


def triangle_areas(vertices: NDArray[np.floating], faces: NDArray[np.integer]) -> NDArray[np.float64]:
    if faces.size == 0:
        return np.zeros(0, dtype=np.float64)
    corners = np.asarray(vertices, dtype=np.float64)[faces]
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=-1)


@dataclass(frozen=True, kw_only=True)
class Mesh:
    vertices: NDArray[np.float64]
    faces: NDArray[np.int64]

    def __post_init__(self) -> None:
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ShapeMismatchError("mesh vertices", self.vertices.shape, (-1, 3))
        if self.faces.size and (self.faces.ndim != 2 or self.faces.shape[1] != 3):
            raise ShapeMismatchError("mesh faces", self.faces.shape, (-1, 3))
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ShapeMismatchError("mesh faces", self.faces.shape, self.vertices.shape)

    @classmethod
    def empty(cls) -> "Mesh":
        return cls(vertices=np.zeros((0, 3)), faces=np.zeros((0, 3), dtype=np.int64))

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    def areas(self) -> NDArray[np.float64]:
        return triangle_areas(self.vertices, self.faces)

    def area(self) -> float:
        return float(self.areas().sum())


@dataclass(frozen=True, kw_only=True)
class PointCloud:
    points: NDArray[np.float64]

    @property
    def count(self) -> int:
        return len(self.points)


def sample_surface(mesh: Mesh, count: int, rng: Rng) -> PointCloud:
    """Area-weighted uniform samples on the triangles of `mesh`."""
    if mesh.is_empty:
        raise DegenerateInputError("Cannot sample the surface of an empty mesh")
    if count < 1:
        raise DegenerateInputError(f"Surface sample count must be positive, got {count}")
    areas = mesh.areas()
    triangles = rng.generator.choice(len(areas), size=count, p=areas / areas.sum())
    r1 = np.sqrt(rng.generator.random(count))
    r2 = rng.generator.random(count)
    weights = np.stack([1.0 - r1, r1 * (1.0 - r2), r1 * r2], axis=-1)
    corners = mesh.vertices[mesh.faces[triangles]]
    return PointCloud(points=np.einsum("nk,nkd->nd", weights, corners))
