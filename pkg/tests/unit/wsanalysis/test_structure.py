import numpy as np
import pytest

from toolkit.exceptions import ConfigurationError, DegenerateInputError
from weightspace.fitting import make_space, shared_init_code
from weightspace.fitting.fit import fit_instance
from weightspace.fitting.metrics import reconstruction_error
from weightspace.nfcore import FieldArch
from weightspace.numerics import Rng
from weightspace.wsanalysis import cosine_similarity, lmc_barrier, perturb_init, perturbation_experiment, perturbation_pairs
from weightspace.wsanalysis import structure as structure_module


@pytest.fixture()
def space():
    return make_space("mlp", standalone_arch=FieldArch.image_standalone(hidden_width=8, hidden_layers=1, omega0=1.0))


class Test_PerturbInit:
    @pytest.mark.unit()
    def test_endpoints(self):
        a, b = Rng(0).normal(50), Rng(1).normal(50)
        np.testing.assert_array_equal(perturb_init(a, b, 0.0), a)
        np.testing.assert_array_equal(perturb_init(a, b, 1.0), b)

    @pytest.mark.unit()
    def test_variance_is_preserved(self):
        a, b = Rng(0).normal(100_000), Rng(1).normal(100_000)
        assert 0.98 <= perturb_init(a, b, 0.6).var() <= 1.02

    @pytest.mark.unit()
    @pytest.mark.parametrize("lam", [-0.1, 1.5])
    def test_strength_out_of_range(self, lam):
        with pytest.raises(ConfigurationError):
            perturb_init(np.zeros(3), np.zeros(3), lam)


class Test_CosineSimilarity:
    @pytest.mark.unit()
    def test_known_values(self):
        v = np.array([1.0, 2.0, -3.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0)
        assert cosine_similarity(v, -v) == pytest.approx(-1.0)
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    @pytest.mark.unit()
    def test_scale_invariant_and_symmetric(self):
        a, b = Rng(0).normal(20), Rng(1).normal(20)
        assert cosine_similarity(a, 3.5 * b) == pytest.approx(cosine_similarity(b, a))

    @pytest.mark.unit()
    def test_zero_vector_is_rejected(self):
        with pytest.raises(DegenerateInputError):
            cosine_similarity(np.zeros(4), np.ones(4))


@pytest.mark.unit()
def test_barrier_of_identical_fits_is_the_fit_error(space, toy_images, quick_fit_config):
    result = fit_instance(space, space.initial(shared_init_code(space, 0)), toy_images[0], quick_fit_config, seed=0, stream=0)
    barrier = lmc_barrier(space, result.vector, result.vector, toy_images[0])
    expected = reconstruction_error(space, result.tensors, toy_images[0])
    assert barrier.value == pytest.approx(expected.value, abs=1e-6)
    assert barrier.value >= 0.0
    assert not barrier.flagged


@pytest.mark.unit()
async def test_zero_strength_gives_unit_similarity(space, toy_images, quick_fit_config):
    rows = await perturbation_experiment([space], toy_images, [0.0], quick_fit_config, seed=0, trials=2)
    assert len(rows) == 1
    assert rows[0].similarity_mean == pytest.approx(1.0)
    assert rows[0].trials == 2


@pytest.mark.unit()
async def test_one_row_per_parameterization_and_strength(space, toy_images, quick_fit_config):
    other = make_space("mlp-asym", standalone_arch=FieldArch.image_standalone(hidden_width=8, hidden_layers=1, omega0=1.0))
    rows = await perturbation_experiment([space, other], toy_images, [0.0, 0.5, 1.0], quick_fit_config, seed=0, trials=2, jobs=2)
    assert [(row.parameterization, row.lam) for row in rows] == [
        ("mlp", 0.0), ("mlp", 0.5), ("mlp", 1.0), ("mlp-asym", 0.0), ("mlp-asym", 0.5), ("mlp-asym", 1.0),
    ]
    assert rows[1].similarity_mean < 1.0


@pytest.mark.unit()
async def test_single_trial_is_rejected(space, toy_images, quick_fit_config):
    with pytest.raises(ConfigurationError):
        await perturbation_experiment([space], toy_images, [0.0], quick_fit_config, seed=0, trials=1)


@pytest.mark.unit()
@pytest.mark.parametrize("parameterization", ["mlp-asym", "mlora-asym"])
def test_frozen_entries_match_across_every_pair(parameterization, tiny_base, toy_images, quick_fit_config, monkeypatch):
    if parameterization == "mlora-asym":
        space = make_space(parameterization, base=tiny_base, rank=4, mask_seed=2)
    else:
        space = make_space(parameterization, standalone_arch=FieldArch.image_standalone(hidden_width=16, hidden_layers=1))
    fits = []

    def recording_fit(*args, **kwargs):
        result = fit_instance(*args, **kwargs)
        fits.append(result)
        return result

    monkeypatch.setattr(structure_module, "fit_instance", recording_fit)
    for index, instance in enumerate(toy_images[:2]):
        perturbation_pairs(space, instance, [0.5, 1.0], quick_fit_config, seed=0, index=index, barrier_resolution=16)
    assert len(fits) == 6
    for result in fits:
        for key, values in space.frozen_entries(result.tensors).items():
            assert values.tobytes() == space.mask.entries[key].values.tobytes()
