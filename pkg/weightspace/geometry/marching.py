__all__ = ["Contour", "marching_cubes", "marching_squares"]

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from toolkit.exceptions import ShapeMismatchError

from .grid import Grid
from .surface import DEGENERATE_AREA, Mesh, triangle_areas
from .tables import (
    CORNER_OFFSETS,
    EDGE_AXIS,
    EDGE_START,
    SQUARE_CORNER_OFFSETS,
    SQUARE_EDGE_AXIS,
    SQUARE_EDGE_START,
    SQUARE_SEGMENTS,
    TRIANGLES,
)

LOGGER = logging.getLogger(__name__)


def _case_index(below: NDArray[np.bool_], offsets: NDArray[np.int64]) -> NDArray[np.int64]:
    cells = tuple(size - 1 for size in below.shape)
    case = np.zeros(cells, dtype=np.int64)
    for bit, offset in enumerate(offsets):
        view = below[tuple(slice(o, o + c) for o, c in zip(offset, cells, strict=True))]
        case |= view.astype(np.int64) << bit
    return case


def _edge_vertices(
    grid: Grid,
    iso: float,
    starts: NDArray[np.int64],
    axes: NDArray[np.int64],
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """
    Deduplicate lattice edges and place one vertex on each, at the linear zero crossing of (value - iso).
    Returns the vertex positions and, per input edge, the index of its vertex.
    """
    shape = np.asarray(grid.resolution, dtype=np.int64)
    keys = axes.copy()
    for dim in range(grid.ndim):
        keys = keys * shape[dim] + starts[:, dim]
    unique, inverse = np.unique(keys, return_inverse=True)

    first = np.zeros(len(unique), dtype=np.int64)
    first[inverse] = np.arange(len(keys))
    a = starts[first]
    axis = axes[first]
    b = a.copy()
    b[np.arange(len(b)), axis] += 1
    f_a = grid.values[tuple(a.T)]
    f_b = grid.values[tuple(b.T)]
    t = (iso - f_a) / (f_b - f_a)
    position = a.astype(np.float64)
    position[np.arange(len(position)), axis] += t
    return grid.to_world(position), inverse.reshape(-1)


def marching_cubes(grid: Grid, iso: float = 0.0) -> Mesh:
    """
    Triangulate the `iso` level set of a 3D grid with the 256-case table. Vertices are shared between neighbouring
    cells, so closed level sets give watertight meshes. A field without a sign change yields an empty mesh.
    """
    if grid.ndim != 3:
        raise ShapeMismatchError("marching_cubes", grid.resolution, (-1, -1, -1))
    case = _case_index(grid.values < iso, CORNER_OFFSETS)
    active = np.nonzero((case != 0) & (case != 255))
    if len(active[0]) == 0:
        LOGGER.debug("No crossing of level %s; empty mesh", iso)
        return Mesh.empty()

    cells = np.stack(active, axis=-1)
    table = TRIANGLES[case[active], :15].reshape(-1, 5, 3)
    used = table[:, :, 0] >= 0
    owner = np.broadcast_to(np.arange(len(cells))[:, None], used.shape)[used]
    edges = table[used]

    starts = cells[owner][:, None, :] + EDGE_START[edges]
    axes = EDGE_AXIS[edges]
    vertices, index = _edge_vertices(grid, iso, starts.reshape(-1, 3), axes.reshape(-1))
    faces = index.reshape(-1, 3)

    faces = faces[triangle_areas(vertices, faces) > DEGENERATE_AREA]
    referenced, compact = np.unique(faces, return_inverse=True)
    return Mesh(vertices=vertices[referenced], faces=compact.reshape(-1, 3).astype(np.int64))


@dataclass(frozen=True, kw_only=True)
class Contour:
    """Level-set polyline pieces of a 2D grid: vertices (m, 2) and segments as vertex index pairs."""

    vertices: NDArray[np.float64]
    segments: NDArray[np.int64]

    @property
    def is_empty(self) -> bool:
        return len(self.segments) == 0

    def length(self) -> float:
        if self.is_empty:
            return 0.0
        ends = self.vertices[self.segments]
        return float(np.linalg.norm(ends[:, 1] - ends[:, 0], axis=-1).sum())


def marching_squares(grid: Grid, iso: float = 0.0) -> Contour:
    if grid.ndim != 2:
        raise ShapeMismatchError("marching_squares", grid.resolution, (-1, -1))
    case = _case_index(grid.values < iso, SQUARE_CORNER_OFFSETS)
    cell_list: list[NDArray[np.int64]] = []
    edge_list: list[tuple[int, int]] = []
    for code, segments in enumerate(SQUARE_SEGMENTS):
        if not segments:
            continue
        cells = np.argwhere(case == code)
        for pair in segments:
            cell_list.append(cells)
            edge_list.extend([pair] * len(cells))
    if not edge_list:
        return Contour(vertices=np.zeros((0, 2)), segments=np.zeros((0, 2), dtype=np.int64))

    cells = np.concatenate(cell_list)
    edges = np.asarray(edge_list, dtype=np.int64)
    starts = cells[:, None, :] + SQUARE_EDGE_START[edges]
    vertices, index = _edge_vertices(grid, iso, starts.reshape(-1, 2), SQUARE_EDGE_AXIS[edges].reshape(-1))
    return Contour(vertices=vertices, segments=index.reshape(-1, 2))
