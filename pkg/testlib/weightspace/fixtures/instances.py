import numpy as np
import pytest

from weightspace.datastore import ImageInstance, SdfInstance, SphereSdf, ToyImageSpec, gen_toy_images
from weightspace.fitting import FittingConfiguration


@pytest.fixture()
def toy_images():
    return gen_toy_images(ToyImageSpec(resolution=8, channels=3), 6, seed=3)


@pytest.fixture()
def constant_image():
    return ImageInstance(id="flat", label=0, pixels=np.full((8, 8, 3), 0.5, dtype=np.float32))


@pytest.fixture()
def sphere_instance():
    return SdfInstance(id="ball", label=1, shape=SphereSdf(radius=0.5))


@pytest.fixture()
def quick_fit_config():
    return FittingConfiguration(steps=20, points=64, log_every=5, metric_resolution=16, metric_samples=256)
