import pytest

from weightspace.diffusion import DiffusionConfiguration


@pytest.fixture()
def tiny_diffusion_config():
    return DiffusionConfiguration(
        timesteps=20,
        chunk_size=8,
        token_dim=16,
        depth=1,
        heads=2,
        batch_size=4,
        epochs=3,
        lr_start=1e-3,
        lr_end=1e-3,
        ddim_steps=5,
        log_every=1,
    )
