__all__ = ["CHECKPOINT_MAGIC", "BaseCheckpoint", "read_checkpoint", "write_checkpoint"]

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from toolkit.exceptions import FormatError, HashMismatchError
from weightspace.nfcore import FieldArch, WeightSet

from .container import read_container, write_container

LOGGER = logging.getLogger(__name__)

CHECKPOINT_MAGIC: str = "WSC1"


@dataclass(kw_only=True)
class BaseCheckpoint:
    """
    Trained base field: raw and EMA weights, the per-instance latent codes (N x d_z) and training metadata.
    Downstream stages use the EMA weights; `base_hash` identifies them.
    """

    arch: FieldArch
    weights: WeightSet
    ema: WeightSet
    latents: NDArray[np.float32]
    instance_ids: list[str]
    metadata: dict = field(default_factory=dict)

    @property
    def base_hash(self) -> str:
        return self.ema.content_hash()


def write_checkpoint(path: Path, checkpoint: BaseCheckpoint) -> str:
    header = {
        "magic": CHECKPOINT_MAGIC,
        "arch": checkpoint.arch.manifest(),
        "arch_hash": checkpoint.arch.content_hash(),
        "base_hash": checkpoint.base_hash,
        "instance_ids": checkpoint.instance_ids,
        "metadata": checkpoint.metadata,
    }
    blocks = {
        "weights": checkpoint.weights.flatten(),
        "ema": checkpoint.ema.flatten(),
        "latents": np.asarray(checkpoint.latents, dtype=np.float32).reshape(len(checkpoint.instance_ids), checkpoint.arch.latent_dim),
    }
    payload_hash = write_container(path, CHECKPOINT_MAGIC, header, blocks)
    LOGGER.info("Wrote base checkpoint %s (base hash %s)", path, checkpoint.base_hash[:12])
    return payload_hash


def read_checkpoint(path: Path) -> BaseCheckpoint:
    container = read_container(path, CHECKPOINT_MAGIC)
    header = container.header
    arch = FieldArch.model_validate(header["arch"])
    if arch.content_hash() != header["arch_hash"]:
        raise HashMismatchError(path, header["arch_hash"], arch.content_hash())
    try:
        weights = WeightSet.unflatten(container.blocks["weights"], arch)
        ema = WeightSet.unflatten(container.blocks["ema"], arch)
    except KeyError as e:
        raise FormatError(path, 8, f"missing block {e}") from e
    checkpoint = BaseCheckpoint(
        arch=arch,
        weights=weights,
        ema=ema,
        latents=container.blocks["latents"],
        instance_ids=header["instance_ids"],
        metadata=header["metadata"],
    )
    if checkpoint.base_hash != header["base_hash"]:
        raise HashMismatchError(path, header["base_hash"], checkpoint.base_hash)
    return checkpoint
