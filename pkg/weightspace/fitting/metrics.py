__all__ = [
    "EMPTY_MESH_CHAMFER",
    "PSNR_SENTINEL",
    "ReconstructionScore",
    "field_function",
    "metric_name",
    "psnr",
    "reconstruction_error",
    "reconstruction_score",
    "surface_cloud",
]

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import torch
from numpy.typing import ArrayLike, NDArray

from toolkit.exceptions import ShapeMismatchError
from weightspace.datastore import ImageInstance, Instance, Modality, SdfInstance, pixel_centers
from weightspace.geometry import (
    DEFAULT_RESOLUTION,
    SURFACE_SAMPLES,
    chamfer,
    marching_cubes,
    sample_field_to_grid,
    sample_surface,
)
from weightspace.numerics import Rng, Tensor

from .spaces import ParameterSpace

LOGGER = logging.getLogger(__name__)

PSNR_SENTINEL: float = 99.0
"""Reported instead of +inf when the prediction is exact."""
EMPTY_MESH_CHAMFER: float = 2.0 * math.sqrt(3.0)
"""Reported when a predicted field has no zero crossing: the diagonal of the [-1, 1]^3 domain."""
SURFACE_STREAM: int = 0x73757266


def metric_name(modality: Modality) -> str:
    return "psnr" if modality is Modality.IMAGE else "chamfer"


def psnr(prediction: ArrayLike, target: ArrayLike, peak: float = 1.0) -> float:
    pred = np.asarray(prediction, dtype=np.float64)
    gt = np.asarray(target, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatchError("psnr", pred.shape, gt.shape)
    mse = float(np.mean((pred - gt) ** 2))
    if mse == 0.0:
        return PSNR_SENTINEL
    return min(PSNR_SENTINEL, 10.0 * math.log10(peak * peak / mse))


def field_function(space: ParameterSpace, tensors: dict[str, Tensor]) -> Callable[[NDArray], NDArray[np.float64]]:
    """Numpy view of a fitted field for grid sampling; the first output channel is the scalar field."""

    def evaluate(points: NDArray) -> NDArray[np.float64]:
        with torch.no_grad():
            out = space.forward(tensors, torch.from_numpy(np.asarray(points, dtype=np.float32)))
        return out[..., 0].double().numpy()

    return evaluate


def surface_cloud(
    field: Callable[[NDArray], NDArray],
    rng: Rng,
    *,
    resolution: int = DEFAULT_RESOLUTION,
    samples: int = SURFACE_SAMPLES,
) -> NDArray[np.float64] | None:
    """Surface samples of the zero level set, or None when the extracted mesh is empty."""
    mesh = marching_cubes(sample_field_to_grid(field, resolution))
    if mesh.is_empty:
        return None
    return sample_surface(mesh, samples, rng).points


@dataclass(frozen=True, kw_only=True)
class ReconstructionScore:
    value: float
    empty_mesh: bool = False


def reconstruction_score(
    space: ParameterSpace,
    tensors: dict[str, Tensor],
    instance: Instance,
    *,
    resolution: int = DEFAULT_RESOLUTION,
    samples: int = SURFACE_SAMPLES,
    seed: int = 0,
) -> ReconstructionScore:
    """PSNR over the full pixel grid for images; Chamfer between ground-truth and fitted surfaces for SDFs."""
    if isinstance(instance, ImageInstance):
        height, width, _ = instance.shape
        with torch.no_grad():
            prediction = space.forward(tensors, torch.from_numpy(pixel_centers(height, width)))
        return ReconstructionScore(value=psnr(prediction.numpy(), instance.targets()))
    return ReconstructionScore(
        **_chamfer_score(field_function(space, tensors), instance, resolution=resolution, samples=samples, seed=seed),
    )


def _chamfer_score(
    field: Callable[[NDArray], NDArray],
    instance: SdfInstance,
    *,
    resolution: int,
    samples: int,
    seed: int,
) -> dict:
    reference = surface_cloud(instance.values, Rng(seed, SURFACE_STREAM), resolution=resolution, samples=samples)
    predicted = surface_cloud(field, Rng(seed, SURFACE_STREAM + 1), resolution=resolution, samples=samples)
    if reference is None or predicted is None:
        LOGGER.warning("Empty mesh while scoring '%s'; reporting the domain diagonal", instance.id)
        return {"value": EMPTY_MESH_CHAMFER, "empty_mesh": True}
    return {"value": chamfer(reference, predicted)}


def reconstruction_error(
    space: ParameterSpace,
    tensors: dict[str, Tensor],
    instance: Instance,
    *,
    resolution: int = DEFAULT_RESOLUTION,
    samples: int = SURFACE_SAMPLES,
    seed: int = 0,
) -> ReconstructionScore:
    """An error where lower is better: full-grid MSE for images, Chamfer for SDFs."""
    if isinstance(instance, ImageInstance):
        height, width, _ = instance.shape
        with torch.no_grad():
            prediction = space.forward(tensors, torch.from_numpy(pixel_centers(height, width))).double().numpy()
        return ReconstructionScore(value=float(np.mean((prediction - instance.targets()) ** 2)))
    return reconstruction_score(space, tensors, instance, resolution=resolution, samples=samples, seed=seed)
