import numpy as np
import pytest

from weightspace.datastore import ToyImageSpec, ToySdfSpec, gen_toy_images, gen_toy_sdfs, read_instances, write_instances


@pytest.mark.unit()
def test_image_instances_round_trip(tmp_path):
    instances = gen_toy_images(ToyImageSpec(resolution=8), 3, seed=0)
    paths = write_instances(tmp_path, instances)
    assert len(paths) == 4
    restored = read_instances(tmp_path)
    assert [i.id for i in restored] == [i.id for i in instances]
    for a, b in zip(restored, instances, strict=True):
        assert np.abs(a.pixels - b.pixels).max() <= 1 / 255


@pytest.mark.unit()
def test_sdf_instances_round_trip(tmp_path):
    instances = gen_toy_sdfs(ToySdfSpec(), 4, seed=0)
    write_instances(tmp_path, instances)
    restored = read_instances(tmp_path)
    points = np.random.default_rng(0).uniform(-1, 1, (50, 3))
    for a, b in zip(restored, instances, strict=True):
        assert a.label == b.label
        assert np.array_equal(a.values(points), b.values(points))
