import numpy as np
import pytest
import torch

from toolkit.exceptions import ConfigurationError, NonFiniteError
from weightspace.basemodel import (
    AutodecoderState,
    BaseTrainingConfiguration,
    StageConfig,
    autodecode_loss,
    autodecode_step,
    ema_update,
    ema_warmup_decay,
    sample_batch,
    train_base,
)
from weightspace.datastore import ImageInstance
from weightspace.fitting.sampling import instance_targets, sample_coords
from weightspace.nfcore import WeightSet, base_forward
from weightspace.numerics import LrSchedule, Rng, ScheduleKind, mse


def _config(**overrides):
    defaults = {"stages": [StageConfig(batch_size=4, points=32, steps=6)], "log_every": 2}
    return BaseTrainingConfiguration(**(defaults | overrides))


def _state(arch, count=4, **overrides):
    config = _config(**overrides)
    schedule = LrSchedule(kind=ScheduleKind.CONSTANT, start=1e-3, end=1e-3, total_steps=10)
    return AutodecoderState.initialize(arch, count, config, Rng(0), schedule)


@pytest.mark.unit()
def test_ema_update_arithmetic(tiny_modulated_arch):
    ema = WeightSet.initialize(tiny_modulated_arch, Rng(1))
    weights = WeightSet.initialize(tiny_modulated_arch, Rng(2))
    expected = {key: 0.999 * ema[key] + 0.001 * weights[key] for key in ema}
    ema_update(ema, weights, 0.999)
    for key in ema:
        torch.testing.assert_close(ema[key], expected[key])


@pytest.mark.unit()
def test_zero_decay_copies_weights(tiny_modulated_arch):
    ema = WeightSet.initialize(tiny_modulated_arch, Rng(1))
    weights = WeightSet.initialize(tiny_modulated_arch, Rng(2))
    ema_update(ema, weights, 0.0)
    for key in ema:
        torch.testing.assert_close(ema[key], weights[key])


@pytest.mark.unit()
def test_standalone_arch_is_rejected(tiny_standalone_arch):
    with pytest.raises(ConfigurationError):
        _state(tiny_standalone_arch)


@pytest.mark.unit()
def test_decay_out_of_range_is_rejected(tiny_modulated_arch):
    state = _state(tiny_modulated_arch)
    with pytest.raises(ConfigurationError):
        AutodecoderState(
            arch=state.arch,
            weights=state.weights,
            latents=state.latents,
            ema=state.ema,
            optimizer=state.optimizer,
            latent_optimizer=state.latent_optimizer,
            lambda_r=0.0,
            ema_decay=1.0,
        )


@pytest.mark.unit()
def test_latent_prior_grows_with_lambda(tiny_modulated_arch, toy_images):
    indices = np.arange(4)
    coords, targets = sample_batch(toy_images, indices, 16, Rng(3), tiny_modulated_arch.output_dim)
    plain = _state(tiny_modulated_arch, lambda_r=0.0)
    heavy = _state(tiny_modulated_arch, lambda_r=10.0)
    index = torch.from_numpy(indices)
    assert float(autodecode_loss(heavy, index, coords, targets)) > float(autodecode_loss(plain, index, coords, targets))


@pytest.mark.unit()
def test_large_lambda_shrinks_latents(tiny_modulated_arch, toy_images):
    state = _state(tiny_modulated_arch, lambda_r=100.0)
    start = float(state.latents.detach().norm())
    indices = np.arange(4)
    for step in range(20):
        coords, targets = sample_batch(toy_images, indices, 16, Rng(3, step), tiny_modulated_arch.output_dim)
        autodecode_step(state, torch.from_numpy(indices), coords, targets)
    assert float(state.latents.detach().norm()) < start


@pytest.mark.unit()
def test_non_finite_loss_names_stage_and_step(tiny_modulated_arch, toy_images):
    state = _state(tiny_modulated_arch)
    indices = np.arange(2)
    coords, targets = sample_batch(toy_images, indices, 8, Rng(3), tiny_modulated_arch.output_dim)
    with pytest.raises(NonFiniteError, match="stage 1, step 0"):
        autodecode_step(state, torch.from_numpy(indices), coords, targets * float("nan"), stage=1)


@pytest.mark.unit()
def test_train_base_checkpoint(tiny_modulated_arch, toy_images):
    checkpoint = train_base(tiny_modulated_arch, toy_images, _config(), seed=5)
    assert checkpoint.latents.shape == (len(toy_images), tiny_modulated_arch.latent_dim)
    assert checkpoint.instance_ids == [instance.id for instance in toy_images]
    assert checkpoint.metadata["steps"] == 6
    again = train_base(tiny_modulated_arch, toy_images, _config(), seed=5)
    np.testing.assert_array_equal(checkpoint.ema.flatten(), again.ema.flatten())


def _reconstruction_loss(checkpoint, instances, weights):
    losses = []
    with torch.no_grad():
        for i, instance in enumerate(instances):
            height, width, _ = instance.shape
            batch = sample_coords(instance, height * width, Rng(0), "grid")
            z = torch.from_numpy(checkpoint.latents[i])
            prediction = base_forward(checkpoint.arch, weights, torch.from_numpy(batch.points), z=z)
            losses.append(float(mse(prediction, torch.from_numpy(instance_targets(instance, batch)))))
    return float(np.mean(losses))


def _constant_rate(**overrides):
    return _config(schedule=ScheduleKind.CONSTANT, lr_start=1e-3, lr_end=1e-3, **overrides)


@pytest.mark.unit()
def test_ema_warmup_decay():
    assert ema_warmup_decay(0.999, 0) == pytest.approx(0.1)
    assert ema_warmup_decay(0.999, 90) == pytest.approx(0.91)
    assert ema_warmup_decay(0.999, 100_000) == 0.999
    assert ema_warmup_decay(0.0, 5) == 0.0


@pytest.mark.unit()
def test_codes_outside_the_batch_do_not_move(tiny_modulated_arch, toy_images):
    state = _state(tiny_modulated_arch)
    before = state.latents.detach().clone()
    for step, rows in enumerate(([0, 1], [1], [1], [1])):
        indices = np.asarray(rows)
        coords, targets = sample_batch(toy_images, indices, 16, Rng(3, step), tiny_modulated_arch.output_dim)
        autodecode_step(state, torch.from_numpy(indices), coords, targets)
    after = state.latents.detach()
    torch.testing.assert_close(after[2:], before[2:], rtol=0, atol=0)
    assert not torch.equal(after[1], before[1])
    # Row 0 took a single step; its momentum must not keep carrying it once it left the batch.
    single = _state(tiny_modulated_arch)
    coords, targets = sample_batch(toy_images, np.asarray([0, 1]), 16, Rng(3, 0), tiny_modulated_arch.output_dim)
    autodecode_step(single, torch.tensor([0, 1]), coords, targets)
    torch.testing.assert_close(after[0], single.latents.detach()[0], rtol=0, atol=0)


@pytest.mark.unit()
@pytest.mark.slow()
def test_windowed_loss_does_not_rise_across_stages(tiny_modulated_arch, toy_images):
    config = _constant_rate(
        stages=[
            StageConfig(batch_size=4, points=16, steps=300),
            StageConfig(batch_size=4, points=32, steps=300),
            StageConfig(batch_size=4, points=64, steps=300),
        ],
        log_every=100,
    )
    windows = train_base(tiny_modulated_arch, toy_images[:4], config, seed=2).metadata["window_losses"]
    assert len(windows) == 9
    for boundary in (3, 6):
        assert windows[boundary] <= windows[boundary - 1]


@pytest.mark.unit()
@pytest.mark.slow()
def test_duplicate_instances_share_a_code(tiny_modulated_arch, toy_images):
    pixels = toy_images[0].pixels
    twins = [ImageInstance(id=f"twin-{i}", label=0, pixels=pixels.copy()) for i in range(2)]
    config = _constant_rate(stages=[StageConfig(batch_size=2, points=64, steps=2000)], latent_std=0.01, log_every=100)
    latents = torch.from_numpy(train_base(tiny_modulated_arch, twins, config, seed=4).latents)
    assert float(torch.nn.functional.cosine_similarity(latents[0], latents[1], dim=0)) > 0.95


@pytest.mark.unit()
@pytest.mark.slow()
def test_ema_weights_reconstruct_close_to_raw(tiny_modulated_arch, toy_images):
    instances = toy_images[:4]
    config = _config(
        stages=[
            StageConfig(batch_size=4, points=32, steps=700),
            StageConfig(batch_size=4, points=64, steps=700),
            StageConfig(batch_size=2, points=64, steps=700),
        ],
        log_every=100,
    )
    checkpoint = train_base(tiny_modulated_arch, instances, config, seed=6)
    raw = _reconstruction_loss(checkpoint, instances, checkpoint.weights)
    averaged = _reconstruction_loss(checkpoint, instances, checkpoint.ema)
    assert averaged <= 2.0 * raw
