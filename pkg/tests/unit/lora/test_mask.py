import numpy as np
import pytest
import torch

from toolkit.exceptions import ConfigurationError
from weightspace.lora import AsymMask, MaskMode, apply_mask, frozen_per_row, make_mask
from weightspace.nfcore import FieldArch, WeightSet
from weightspace.numerics import LrSchedule, ScheduleKind, adam_step, backward, make_adam


def _b_factors(arch, rank):
    generator = torch.Generator().manual_seed(0)
    return {f"{spec.name}.B": torch.randn(spec.d_out, rank, generator=generator) for spec in arch.modulated_layers()}


@pytest.mark.unit()
@pytest.mark.parametrize(("d_out", "expected"), [(1, 1), (16, 4), (17, 5), (94, 10), (99, 10)])
def test_frozen_per_row(d_out, expected):
    assert frozen_per_row(d_out) == expected


@pytest.mark.unit()
def test_empty_output_is_rejected():
    with pytest.raises(ConfigurationError):
        frozen_per_row(0)


@pytest.mark.unit()
def test_multiplicative_mask_freezes_zeros(tiny_modulated_arch):
    mask = make_mask(tiny_modulated_arch, MaskMode.MULTIPLICATIVE, 0.0, seed=3, rank=8)
    assert set(mask.entries) == {f"{spec.name}.B" for spec in tiny_modulated_arch.modulated_layers()}
    for entry in mask.entries.values():
        assert entry.shape == (16, 8)
        assert np.count_nonzero(entry.values) == 0
        assert entry.trainable().sum(axis=1).tolist() == [4] * 16


@pytest.mark.unit()
def test_additive_mask_draws_with_kappa_variance(tiny_modulated_arch):
    mask = make_mask(tiny_modulated_arch, MaskMode.ADDITIVE, 6.0, seed=3, rank=8, scale=1.0)
    values = np.concatenate([entry.values for entry in mask.entries.values()])
    assert values.size == 4 * 16 * 4
    assert 2.0 < values.std() < 2.9


@pytest.mark.unit()
def test_positions_are_distinct_per_row(tiny_modulated_arch):
    mask = make_mask(tiny_modulated_arch, MaskMode.MULTIPLICATIVE, 0.0, seed=5, rank=8)
    for entry in mask.entries.values():
        pairs = set(zip(entry.rows.tolist(), entry.cols.tolist(), strict=True))
        assert len(pairs) == entry.rows.size
        assert np.bincount(entry.rows).tolist() == [4] * 16


@pytest.mark.unit()
def test_mask_is_deterministic_given_seed(tiny_modulated_arch):
    a = make_mask(tiny_modulated_arch, MaskMode.ADDITIVE, 6.0, seed=1, rank=8, scale=0.1)
    b = make_mask(tiny_modulated_arch, MaskMode.ADDITIVE, 6.0, seed=1, rank=8, scale=0.1)
    c = make_mask(tiny_modulated_arch, MaskMode.ADDITIVE, 6.0, seed=2, rank=8, scale=0.1)
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != c.content_hash()
    assert a.descriptor()["hash"] == a.content_hash()


@pytest.mark.unit()
@pytest.mark.parametrize(("arch", "frozen"), [(FieldArch.image_standalone(), 2_820), (FieldArch.sdf_standalone(), 2_970)])
def test_standalone_mask_covers_hidden_layers(arch, frozen):
    mask = make_mask(arch, MaskMode.STANDALONE, 6.0, seed=0)
    assert mask.frozen_count() == frozen
    assert arch.parameter_count() - mask.frozen_count() in (27_357 - 2_820, 30_196 - 2_970)
    assert all(key.startswith("hidden") for key in mask.entries)


@pytest.mark.unit()
def test_standalone_mask_uses_initialisation_scale():
    arch = FieldArch.image_standalone(hidden_width=64)
    mask = make_mask(arch, MaskMode.STANDALONE, 4.0, seed=0)
    values = np.concatenate([entry.values for entry in mask.entries.values()])
    # sqrt(kappa) * sqrt(2 / 64) = 0.354
    assert 0.3 < values.std() < 0.41


@pytest.mark.unit()
def test_invalid_masks_are_rejected(tiny_modulated_arch, tiny_standalone_arch):
    with pytest.raises(ConfigurationError):
        make_mask(tiny_modulated_arch, MaskMode.ADDITIVE, 0.0, seed=0, rank=8)
    with pytest.raises(ConfigurationError):
        make_mask(tiny_modulated_arch, MaskMode.MULTIPLICATIVE, 0.0, seed=0, rank=4)
    with pytest.raises(ConfigurationError):
        make_mask(tiny_modulated_arch, MaskMode.MULTIPLICATIVE, 0.0, seed=0)
    with pytest.raises(ConfigurationError):
        make_mask(tiny_modulated_arch, MaskMode.STANDALONE, 6.0, seed=0)


@pytest.mark.unit()
def test_apply_mask_is_idempotent(tiny_modulated_arch):
    mask = make_mask(tiny_modulated_arch, MaskMode.ADDITIVE, 6.0, seed=4, rank=8, scale=0.1)
    tensors = _b_factors(tiny_modulated_arch, 8)
    once = {k: v.clone() for k, v in apply_mask(tensors, mask).items()}
    twice = apply_mask(tensors, mask)
    for key, value in once.items():
        assert torch.equal(value, twice[key])
        entry = mask.entries[key]
        assert torch.equal(value[entry.rows, entry.cols], torch.from_numpy(entry.values))


@pytest.mark.unit()
def test_empty_mask_is_identity(tiny_modulated_arch):
    tensors = _b_factors(tiny_modulated_arch, 8)
    before = {k: v.clone() for k, v in tensors.items()}
    assert not AsymMask.empty()
    apply_mask(tensors, AsymMask.empty())
    assert all(torch.equal(before[k], tensors[k]) for k in tensors)


@pytest.mark.unit()
def test_frozen_entries_survive_optimisation(tiny_modulated_arch):
    mask = make_mask(tiny_modulated_arch, MaskMode.ADDITIVE, 6.0, seed=4, rank=8, scale=0.1)
    tensors = _b_factors(tiny_modulated_arch, 8)
    apply_mask(tensors, mask)
    leaves = [t.requires_grad_(True) for t in tensors.values()]
    schedule = LrSchedule(kind=ScheduleKind.COSINE, start=1e-2, end=1e-4, total_steps=100)
    state = make_adam(leaves, schedule)
    for _ in range(100):
        loss = sum((t - 1.0).pow(2).sum() for t in leaves)
        adam_step(state, leaves, backward(loss, leaves), after_step=lambda: mask.apply(tensors))
    for key, entry in mask.entries.items():
        frozen = tensors[key].detach()[entry.rows, entry.cols]
        assert torch.equal(frozen, torch.from_numpy(entry.values))
