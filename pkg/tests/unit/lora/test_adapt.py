import pytest
import torch

from toolkit.exceptions import ShapeMismatchError
from weightspace.lora import (
    LoraMode,
    adapt_weight,
    apply_additive,
    apply_multiplicative,
    decompose_multiplicative,
    decomposition_terms,
    rank_of,
)


def _factors(seed, d_out=6, d_in=5, rank=3, dtype=torch.float64):
    generator = torch.Generator().manual_seed(seed)
    w = torch.randn(d_out, d_in, generator=generator, dtype=dtype)
    a = torch.randn(rank, d_in, generator=generator, dtype=dtype)
    b = torch.randn(d_out, rank, generator=generator, dtype=dtype)
    return w, a, b


@pytest.mark.unit()
def test_zero_update_is_identity():
    w, a, b = _factors(0)
    assert torch.equal(apply_additive(w, torch.zeros_like(a), b), w)
    assert torch.equal(apply_additive(w, a, torch.zeros_like(b)), w)


@pytest.mark.unit()
def test_rank_one_additive_is_outer_product():
    w, a, b = _factors(1, rank=1)
    assert torch.allclose(apply_additive(w, a, b), w + torch.outer(b[:, 0], a[0]))


@pytest.mark.unit()
@pytest.mark.parametrize("rank", [1, 2, 4])
def test_additive_update_rank_is_bounded(rank):
    w, a, b = _factors(rank, d_out=12, d_in=10, rank=rank)
    assert rank_of(apply_additive(w, a, b) - w) <= rank


@pytest.mark.unit()
def test_multiplicative_identity_and_absorbing_zero():
    w, _, _ = _factors(2)
    a = torch.full((1, 5), 0.5, dtype=torch.float64)
    b = torch.full((6, 1), 2.0, dtype=torch.float64)
    assert torch.allclose(apply_multiplicative(w, a, b), w)
    assert torch.count_nonzero(apply_multiplicative(torch.zeros_like(w), *_factors(3)[1:])) == 0


@pytest.mark.unit()
def test_multiplicative_keeps_zero_pattern():
    w, a, b = _factors(4)
    w[w.abs() < 0.5] = 0.0
    adapted = apply_multiplicative(w, a, b)
    assert torch.all(adapted[w == 0] == 0)


@pytest.mark.unit()
@pytest.mark.parametrize("rank", range(1, 9))
def test_multiplicative_decomposes_into_diagonal_scalings(rank):
    w, a, b = _factors(10 + rank, d_out=9, d_in=8, rank=rank, dtype=torch.float32)
    assert torch.allclose(decompose_multiplicative(w, a, b), apply_multiplicative(w, a, b), atol=1e-5)


@pytest.mark.unit()
def test_rank_one_term_is_diagonal_product():
    w, a, b = _factors(5, rank=1)
    term = torch.diag(b[:, 0]) @ w @ torch.diag(a[0])
    assert torch.allclose(decompose_multiplicative(w, a, b), term)
    assert torch.allclose(term, w * torch.outer(b[:, 0], a[0]))


@pytest.mark.unit()
def test_all_ones_terms_sum_to_rank_times_weight():
    w, _, _ = _factors(6)
    ones_a = torch.ones(3, 5, dtype=torch.float64)
    ones_b = torch.ones(6, 3, dtype=torch.float64)
    assert torch.allclose(decompose_multiplicative(w, ones_a, ones_b), 3 * w)


@pytest.mark.unit()
def test_terms_only_scale_rows_and_columns():
    w, a, b = _factors(7, rank=3)
    terms = decomposition_terms(w, a, b)
    assert terms.shape == (3, 6, 5)
    for i in range(3):
        for j in range(6):
            for k in range(5):
                assert terms[i, j, k].item() == pytest.approx((w[j, k] * b[j, i] * a[i, k]).item())


@pytest.mark.unit()
def test_additive_symmetry_over_random_permutations():
    generator = torch.Generator().manual_seed(99)
    for trial in range(100):
        _, a, b = _factors(1000 + trial, rank=4)
        perm = torch.randperm(4, generator=generator)
        p = torch.eye(4, dtype=torch.float64)[perm]
        assert torch.allclose((b @ p.T) @ (p @ a), b @ a, atol=1e-6)


@pytest.mark.unit()
@pytest.mark.parametrize("op", [apply_additive, apply_multiplicative, decompose_multiplicative])
def test_rank_mismatch_is_rejected(op):
    w, a, _ = _factors(8, rank=3)
    with pytest.raises(ShapeMismatchError):
        op(w, a, torch.zeros(6, 2, dtype=torch.float64))


@pytest.mark.unit()
def test_output_shape_mismatch_is_rejected():
    w, a, b = _factors(9)
    with pytest.raises(ShapeMismatchError):
        apply_additive(w[:4], a, b)


@pytest.mark.unit()
def test_adapt_weight_dispatches_on_mode():
    w, a, b = _factors(12)
    assert torch.equal(adapt_weight(LoraMode.ADDITIVE, w, a, b), apply_additive(w, a, b))
    assert torch.equal(adapt_weight(LoraMode("multiplicative"), w, a, b), apply_multiplicative(w, a, b))


@pytest.mark.unit()
def test_rank_of_zero_matrix():
    assert rank_of(torch.zeros(3, 3)) == 0
