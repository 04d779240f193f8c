__all__ = ["read_points_csv", "read_obj", "write_obj", "write_points_csv"]

from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from toolkit.exceptions import FormatError

from .surface import Mesh


def write_obj(mesh: Mesh, path: Path) -> Path:
    """ASCII Wavefront OBJ with 1-based face indices."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as stream:
        for x, y, z in mesh.vertices:
            stream.write(f"v {x:.6f} {y:.6f} {z:.6f}\n")
        for i, j, k in mesh.faces + 1:
            stream.write(f"f {i} {j} {k}\n")
    return path


def read_obj(path: Path) -> Mesh:
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    offset = 0
    for line in path.read_text(encoding="utf-8").splitlines(keepends=True):
        fields = line.split()
        if fields and fields[0] == "v":
            vertices.append([float(v) for v in fields[1:4]])
        elif fields and fields[0] == "f":
            try:
                faces.append([int(v.split("/")[0]) - 1 for v in fields[1:4]])
            except ValueError as e:
                raise FormatError(path, offset, f"malformed face record {line.strip()!r}") from e
        offset += len(line.encode("utf-8"))
    return Mesh(
        vertices=np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
        faces=np.asarray(faces, dtype=np.int64).reshape(-1, 3),
    )


def write_points_csv(points: ArrayLike, path: Path) -> Path:
    array = np.asarray(points, dtype=np.float64)
    header = ",".join("xyz"[: array.shape[1]])
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, array, delimiter=",", header=header, comments="", fmt="%.6f")
    return path


def read_points_csv(path: Path) -> NDArray[np.float64]:
    try:
        return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as e:
        raise FormatError(path, 0, f"malformed point cloud: {e}") from e
