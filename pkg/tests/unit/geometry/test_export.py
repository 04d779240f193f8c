import numpy as np
import pytest

from weightspace.geometry import marching_cubes, read_obj, read_points_csv, sample_field_to_grid, write_obj, write_points_csv


@pytest.mark.unit()
def test_obj_round_trip(tmp_path):
    mesh = marching_cubes(sample_field_to_grid(lambda p: np.linalg.norm(p, axis=-1) - 0.5, 12))
    restored = read_obj(write_obj(mesh, tmp_path / "mesh" / "sphere.obj"))
    assert np.array_equal(restored.faces, mesh.faces)
    assert np.allclose(restored.vertices, mesh.vertices, atol=1e-6)


@pytest.mark.unit()
def test_points_csv(tmp_path):
    points = np.arange(12, dtype=np.float64).reshape(4, 3) / 7
    path = write_points_csv(points, tmp_path / "cloud.csv")
    assert path.read_text().splitlines()[0] == "x,y,z"
    assert np.allclose(read_points_csv(path), points, atol=1e-6)
