import numpy as np
import pytest
import torch

from toolkit.exceptions import FitDivergedError
from weightspace.basemodel import BaseTrainingConfiguration, StageConfig, train_base
from weightspace.datastore import ToyImageSpec, gen_toy_images
from weightspace.fitting import FittingConfiguration, make_space, shared_init_code
from weightspace.fitting.fit import fit_instance
from weightspace.nfcore import FieldArch


@pytest.fixture()
def space():
    return make_space("mlp", standalone_arch=FieldArch.image_standalone(hidden_width=8, hidden_layers=1, omega0=1.0))


@pytest.mark.unit()
def test_fit_is_deterministic(space, toy_images, quick_fit_config):
    init = space.initial(shared_init_code(space, 0))
    a = fit_instance(space, init, toy_images[0], quick_fit_config, seed=0, stream=0)
    b = fit_instance(space, init, toy_images[0], quick_fit_config, seed=0, stream=0)
    np.testing.assert_array_equal(a.vector, b.vector)
    assert a.report.metric == b.report.metric


@pytest.mark.unit()
def test_fit_report(space, toy_images, quick_fit_config):
    init = space.initial(shared_init_code(space, 0))
    result = fit_instance(space, init, toy_images[1], quick_fit_config, seed=0, stream=1)
    assert result.report.instance_id == toy_images[1].id
    assert result.report.metric_name == "psnr"
    assert len(result.report.losses) == 4
    assert result.vector.shape == (space.trainable_count(),)
    assert not result.report.retried


@pytest.mark.unit()
@pytest.mark.slow()
def test_constant_image_is_fitted_closely(space, constant_image):
    init = space.initial(shared_init_code(space, 0))
    config = FittingConfiguration(steps=500, points=64, log_every=50)
    result = fit_instance(space, init, constant_image, config, seed=0, stream=0)
    assert result.report.metric > 60.0
    assert result.report.losses[-1] < result.report.losses[0]


@pytest.mark.unit()
def test_diverging_fit_is_retried_then_reported(space, constant_image, quick_fit_config, monkeypatch):
    calls = []

    def diverge(tensors, p):
        calls.append(1)
        return tensors["output.bias"] * float("nan") + torch.zeros(p.shape[0], 3)

    monkeypatch.setattr(space, "forward", diverge)
    init = space.initial(shared_init_code(space, 0))
    with pytest.raises(FitDivergedError) as error:
        fit_instance(space, init, constant_image, quick_fit_config, seed=0, stream=0)
    assert error.value.instance_id == "flat"
    assert len(calls) == 2


@pytest.mark.unit()
def test_masked_entries_survive_fitting(toy_images, quick_fit_config):
    space = make_space("mlp-asym", standalone_arch=FieldArch.image_standalone(hidden_width=16, hidden_layers=1))
    init = space.initial(shared_init_code(space, 0))
    result = fit_instance(space, init, toy_images[0], quick_fit_config, seed=0, stream=0)
    for key, values in space.frozen_entries(result.tensors).items():
        np.testing.assert_array_equal(values, space.mask.entries[key].values)


@pytest.mark.integration()
@pytest.mark.slow()
def test_toy_image_is_fitted_on_a_trained_base():
    instances = gen_toy_images(ToyImageSpec(resolution=64), 6, seed=9)
    arch = FieldArch.image_modulated()
    base_config = BaseTrainingConfiguration(
        stages=[StageConfig(batch_size=6, points=1024, steps=400), StageConfig(batch_size=6, points=4096, steps=400)],
        lr_stages=2,
    )
    base = train_base(arch, instances, base_config, seed=0).ema
    space = make_space("mlora-asym", base=base, rank=12, mask_seed=0)
    config = FittingConfiguration(steps=3000, points=4096, log_every=500)
    result = fit_instance(space, space.initial(shared_init_code(space, 0)), instances[0], config, seed=0, stream=0)
    assert result.report.metric >= 30.0


@pytest.mark.integration()
@pytest.mark.slow()
def test_sphere_sdf_is_fitted_within_chamfer_bound(sphere_instance):
    space = make_space("mlp", standalone_arch=FieldArch.sdf_standalone())
    config = FittingConfiguration(steps=1500, points=4096, log_every=500, metric_resolution=64)
    result = fit_instance(space, space.initial(shared_init_code(space, 0)), sphere_instance, config, seed=0, stream=0)
    assert result.report.metric_name == "chamfer"
    assert result.report.metric <= 5e-3
