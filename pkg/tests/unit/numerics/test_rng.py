import numpy as np
import pytest

from weightspace.numerics import Rng


@pytest.mark.unit()
def test_same_key_same_sequence():
    a, b = Rng(7, 3), Rng(7, 3)
    assert np.array_equal(a.normal(100), b.normal(100))
    assert np.array_equal(a.integers(10, 5), b.integers(10, 5))


@pytest.mark.unit()
def test_streams_are_independent():
    assert not np.array_equal(Rng(7, 0).normal(16), Rng(7, 1).normal(16))
    assert np.array_equal(Rng(7).spawn(4).normal(8), Rng(7, 4).normal(8))


@pytest.mark.unit()
def test_draws_are_float32():
    assert Rng(1).normal((2, 3)).dtype == np.float32
    assert Rng(1).uniform(-1, 1, 4).dtype == np.float32


@pytest.mark.unit()
def test_choice_without_replacement_is_unique():
    picks = Rng(0).choice_without_replacement(16, 4)
    assert len(set(picks.tolist())) == 4
