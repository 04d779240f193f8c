import numpy as np
import pytest

from toolkit.exceptions import DegenerateInputError
from weightspace.genmetrics import distance_trio, pairwise_chamfer, trio_from_distances
from weightspace.geometry import chamfer_brute_force
from weightspace.numerics import Rng


def _clouds(count: int, seed: int, *, points: int = 30, offset: float = 0.0) -> list[np.ndarray]:
    g = Rng(seed).generator
    return [offset + g.uniform(0.5, 1.5) * g.normal(size=(points, 3)) for _ in range(count)]


def _brute_force_trio(gen, ref):
    d_gr = np.array([[chamfer_brute_force(x, y) for y in ref] for x in gen])
    pool = [(c, "gen") for c in gen] + [(c, "ref") for c in ref]
    correct = 0
    for i, (cloud, side) in enumerate(pool):
        best, best_side = np.inf, None
        for j, (other, other_side) in enumerate(pool):
            if i == j:
                continue
            d = chamfer_brute_force(cloud, other)
            if d < best or (d == best and other_side != side):
                best, best_side = d, other_side
        correct += best_side == side
    return d_gr.min(axis=0).mean(), len(set(d_gr.argmin(axis=1).tolist())) / len(ref), correct / len(pool)


@pytest.mark.unit()
def test_identical_sets():
    shapes = _clouds(2, seed=0)
    trio = distance_trio(shapes, [s.copy() for s in shapes])
    assert trio.mmd == 0.0
    assert trio.coverage == 1.0
    assert trio.one_nna == 0.0


@pytest.mark.unit()
def test_separated_sets_are_perfectly_distinguishable():
    trio = distance_trio(_clouds(4, seed=1), _clouds(4, seed=2, offset=100.0))
    assert trio.one_nna == 1.0
    assert trio.mmd > 1000.0


@pytest.mark.unit()
def test_matches_brute_force():
    gen, ref = _clouds(5, seed=3), _clouds(5, seed=4, offset=0.2)
    trio = distance_trio(gen, ref)
    mmd, coverage, one_nna = _brute_force_trio(gen, ref)
    assert trio.mmd == pytest.approx(mmd, rel=1e-12)
    assert trio.coverage == coverage
    assert trio.one_nna == one_nna


@pytest.mark.unit()
def test_coverage_counts_distinct_matches():
    gen_ref = np.array([[0.1, 5.0, 5.0], [0.2, 5.0, 5.0]])
    within_gen = np.array([[0.0, 1.0], [1.0, 0.0]])
    within_ref = np.array([[0.0, 9.0, 9.0], [9.0, 0.0, 9.0], [9.0, 9.0, 0.0]])
    trio = trio_from_distances(gen_ref, within_gen, within_ref)
    assert trio.coverage == pytest.approx(1.0 / 3.0)
    assert trio.mmd == pytest.approx((0.1 + 5.0 + 5.0) / 3.0)


@pytest.mark.unit()
def test_ties_count_as_the_opposite_set():
    gen_ref = np.array([[1.0, 2.0], [2.0, 1.0]])
    within = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert trio_from_distances(gen_ref, within, within).one_nna == 0.0


@pytest.mark.unit()
def test_pairwise_chamfer_is_symmetric_with_zero_diagonal():
    matrix = pairwise_chamfer(_clouds(4, seed=5))
    assert np.array_equal(matrix, matrix.T)
    assert np.all(np.diag(matrix) == 0.0)


@pytest.mark.unit()
def test_single_shape_is_rejected():
    with pytest.raises(DegenerateInputError):
        distance_trio(_clouds(1, seed=6), _clouds(3, seed=7))


@pytest.mark.slow()
@pytest.mark.unit()
def test_splits_of_one_pool_are_near_chance():
    pool = _clouds(200, seed=8, points=32)
    trio = distance_trio(pool[:100], pool[100:])
    assert 0.35 <= trio.one_nna <= 0.65
