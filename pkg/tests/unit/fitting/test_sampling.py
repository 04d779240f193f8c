import numpy as np
import pytest

from toolkit.exceptions import ConfigurationError
from weightspace.fitting import NEAR_SURFACE_FRACTION, SDF_CLAMP, SamplingStrategy, instance_targets, sample_coords
from weightspace.numerics import Rng


@pytest.mark.unit()
def test_single_pixel_sample(constant_image):
    batch = sample_coords(constant_image, 1, Rng(0))
    assert batch.points.shape == (1, 2)
    np.testing.assert_array_equal(instance_targets(constant_image, batch), [[0.5, 0.5, 0.5]])


@pytest.mark.unit()
def test_grid_covers_every_pixel(toy_images):
    image = toy_images[0]
    batch = sample_coords(image, 64, Rng(0), SamplingStrategy.GRID)
    np.testing.assert_array_equal(batch.pixel_index, np.arange(64))
    np.testing.assert_array_equal(instance_targets(image, batch), image.targets())


@pytest.mark.unit()
def test_grid_needs_every_pixel(toy_images):
    with pytest.raises(ConfigurationError):
        sample_coords(toy_images[0], 10, Rng(0), SamplingStrategy.GRID)


@pytest.mark.unit()
def test_zero_count_is_rejected(constant_image):
    with pytest.raises(ConfigurationError):
        sample_coords(constant_image, 0, Rng(0))


@pytest.mark.unit()
def test_sampling_is_deterministic(sphere_instance):
    a = sample_coords(sphere_instance, 100, Rng(4, 7))
    b = sample_coords(sphere_instance, 100, Rng(4, 7))
    np.testing.assert_array_equal(a.points, b.points)


@pytest.mark.unit()
def test_mixed_sdf_sampling(sphere_instance):
    batch = sample_coords(sphere_instance, 4000, Rng(1))
    assert abs(batch.near_surface.mean() - NEAR_SURFACE_FRACTION) < 0.05
    assert np.all(np.abs(batch.points) <= 1.0)
    distances = np.abs(np.linalg.norm(batch.points[batch.near_surface], axis=1) - 0.5)
    assert np.median(distances) < 0.05


@pytest.mark.unit()
def test_sdf_targets_are_clamped(sphere_instance):
    batch = sample_coords(sphere_instance, 500, Rng(2), SamplingStrategy.UNIFORM)
    targets = instance_targets(sphere_instance, batch)
    assert targets.shape == (500, 1)
    assert targets.max() <= SDF_CLAMP
    assert targets.min() >= -SDF_CLAMP
