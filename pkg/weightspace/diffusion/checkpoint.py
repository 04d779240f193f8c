__all__ = ["DENOISER_MAGIC", "read_denoiser", "write_denoiser"]

import logging
from pathlib import Path

import numpy as np
import torch

from toolkit.exceptions import ConfigurationError, FormatError
from weightspace.datastore import read_container, write_container

from .configuration import DiffusionConfiguration
from .denoiser import Denoiser
from .tokenizers import Tokenizer
from .train import DiffusionModel, Standardizer, build_denoiser

LOGGER = logging.getLogger(__name__)

DENOISER_MAGIC: str = "WSM1"


def _state_blocks(prefix: str, module: torch.nn.Module) -> dict[str, np.ndarray]:
    return {f"{prefix}/{name}": tensor.detach().float().numpy() for name, tensor in module.state_dict().items()}


def write_denoiser(path: Path, model: DiffusionModel) -> str:
    """Config, tokenizer description, normalisation stats and the dataset hash in the header; float32 parameters."""
    header = {
        "magic": DENOISER_MAGIC,
        "config": model.config.model_dump(mode="json"),
        "tokenizer": model.tokenizer.describe(),
        "dataset_hash": model.dataset_hash,
        "parameterization": model.parameterization,
        "losses": model.losses,
        "ema": model.ema is not None,
    }
    blocks = {"mean": model.standardizer.mean, "std": model.standardizer.std} | _state_blocks("denoiser", model.denoiser)
    if model.ema is not None:
        blocks |= _state_blocks("ema", model.ema)
    payload_hash = write_container(path, DENOISER_MAGIC, header, blocks)
    LOGGER.info("Wrote denoiser checkpoint %s", path)
    return payload_hash


def _load(path: Path, prefix: str, module: Denoiser, blocks: dict[str, np.ndarray]) -> Denoiser:
    state = {}
    for name, reference in module.state_dict().items():
        key = f"{prefix}/{name}"
        if key not in blocks:
            raise FormatError(path, 8, f"missing block '{key}'")
        state[name] = torch.from_numpy(np.array(blocks[key])).reshape(reference.shape)
    module.load_state_dict(state)
    module.eval()
    return module


def read_denoiser(path: Path, tokenizer: Tokenizer) -> DiffusionModel:
    """Rebuild the model around `tokenizer`, which must match the one it was trained with."""
    container = read_container(path, DENOISER_MAGIC)
    header = container.header
    if header.get("tokenizer") != tokenizer.describe():
        raise ConfigurationError(f"{path} was trained with tokenizer {header.get('tokenizer')}, not {tokenizer.describe()}")
    config = DiffusionConfiguration.model_validate(header["config"])
    denoiser = _load(path, "denoiser", build_denoiser(tokenizer, config, 0), container.blocks)
    ema = _load(path, "ema", build_denoiser(tokenizer, config, 0), container.blocks) if header.get("ema") else None
    return DiffusionModel(
        config=config,
        tokenizer=tokenizer,
        denoiser=denoiser,
        standardizer=Standardizer(mean=container.blocks["mean"], std=container.blocks["std"]),
        dataset_hash=header["dataset_hash"],
        parameterization=header["parameterization"],
        ema=ema,
        losses=header["losses"],
    )
