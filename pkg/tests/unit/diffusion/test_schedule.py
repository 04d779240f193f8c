import math

import numpy as np
import pytest
import torch

from toolkit.exceptions import ConfigurationError
from weightspace.diffusion import NoiseSchedule, ddim_step, ddim_timesteps, forward_diffuse


@pytest.fixture()
def schedule():
    return NoiseSchedule.linear(500, 1e-4, 2e-2)


@pytest.mark.unit()
def test_alpha_bar_is_strictly_decreasing(schedule):
    alpha_bars = schedule.alpha_bars
    assert np.all(np.diff(alpha_bars) < 0)
    assert alpha_bars[-1] < 0.05
    assert schedule.alpha_bar(1) == pytest.approx(1.0 - 1e-4)
    assert schedule.alpha_bar(0) == 1.0


@pytest.mark.unit()
@pytest.mark.parametrize(("timesteps", "start", "end"), [(1, 1e-4, 2e-2), (10, 2e-2, 1e-4), (10, 0.0, 0.5), (10, 0.1, 1.0)])
def test_invalid_schedules(timesteps, start, end):
    with pytest.raises(ConfigurationError):
        NoiseSchedule.linear(timesteps, start, end)


@pytest.mark.unit()
def test_zero_noise_scales_the_signal(schedule):
    phi0 = torch.ones(2, 5)
    out = forward_diffuse(phi0, torch.tensor([1, 250]), torch.zeros(2, 5), schedule)
    torch.testing.assert_close(out[1], torch.full((5,), math.sqrt(schedule.alpha_bar(250))))


@pytest.mark.unit()
def test_first_step_is_near_identity(schedule):
    phi0 = torch.linspace(-1.0, 1.0, 8).reshape(1, 8)
    eps = torch.randn(1, 8, generator=torch.Generator().manual_seed(0))
    out = forward_diffuse(phi0, torch.tensor([1]), eps, schedule)
    assert float((out - phi0).norm()) <= math.sqrt(1e-4) * float(eps.norm()) + 1e-4


@pytest.mark.unit()
def test_marginal_statistics(schedule):
    t = 100
    draws = 40_000
    eps = torch.randn(draws, 1, generator=torch.Generator().manual_seed(1))
    out = forward_diffuse(torch.full((draws, 1), 2.0), torch.full((draws,), t), eps, schedule)
    alpha_bar = schedule.alpha_bar(t)
    assert float(out.mean()) == pytest.approx(2.0 * math.sqrt(alpha_bar), rel=0.03)
    assert float(out.var()) == pytest.approx(1.0 - alpha_bar, rel=0.03)


@pytest.mark.unit()
@pytest.mark.parametrize("t", [0, 501])
def test_timestep_out_of_range(schedule, t):
    with pytest.raises(ConfigurationError):
        forward_diffuse(torch.zeros(1, 2), torch.tensor([t]), torch.zeros(1, 2), schedule)


@pytest.mark.unit()
def test_ddim_timesteps():
    assert ddim_timesteps(2, 2) == [2, 1]
    assert ddim_timesteps(500, 100)[0] == 500
    assert ddim_timesteps(500, 100)[-1] == 1
    assert len(set(ddim_timesteps(10, 10))) == 10
    with pytest.raises(ConfigurationError):
        ddim_timesteps(5, 6)


@pytest.mark.unit()
def test_two_step_ddim_by_hand():
    schedule = NoiseSchedule.linear(2, 0.1, 0.2)
    a1, a2 = 0.9, 0.9 * 0.8
    x = torch.tensor([[1.0]])
    eps = torch.tensor([[0.5]])
    x1 = ddim_step(x, eps, 2, 1, schedule)
    x0_hat = (1.0 - math.sqrt(1 - a2) * 0.5) / math.sqrt(a2)
    assert float(x1) == pytest.approx(math.sqrt(a1) * x0_hat + math.sqrt(1 - a1) * 0.5, rel=1e-6)
    x0 = ddim_step(x1, eps, 1, 0, schedule)
    assert float(x0) == pytest.approx((float(x1) - math.sqrt(1 - a1) * 0.5) / math.sqrt(a1), rel=1e-6)
