"""
Frozen random-weight feature extractors and reference-set normalisation.

Features are only comparable between runs that use the same extractor id and seed, so both travel with every
`FeatureSet`.
"""

__all__ = [
    "FEATURE_STREAM",
    "FeatureExtractor",
    "FeatureSet",
    "PatchExtractor",
    "PointCloudExtractor",
    "build_extractor",
    "extract_features",
    "normalize_features",
]

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from toolkit.exceptions import ConfigurationError, DegenerateInputError, ShapeMismatchError
from weightspace.datastore import Modality
from weightspace.numerics import Rng

LOGGER = logging.getLogger(__name__)

FEATURE_STREAM: int = 0x66656174

_CHUNK = 64
"""Samples projected per step."""


@dataclass(frozen=True, kw_only=True)
class FeatureSet:
    features: NDArray[np.float64]
    """(N, N_feature)."""
    extractor: str
    seed: int
    normalized: bool = False
    reference_mean: float | None = None
    reference_std: float | None = None

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise DegenerateInputError(f"Features must be (N, N_feature), got {self.features.shape}")
        if not np.all(np.isfinite(self.features)):
            raise DegenerateInputError(f"Features of extractor '{self.extractor}' contain non-finite values")

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])


class FeatureExtractor(Protocol):
    modality: Modality
    seed: int

    @property
    def id(self) -> str: ...

    def __call__(self, samples: Sequence[NDArray[np.floating]]) -> NDArray[np.float64]: ...


def _relu(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.maximum(x, 0.0)


class PatchExtractor:
    """
    Images to features: non-overlapping patches, each concatenated with its centre coordinate, go through one frozen
    random ReLU projection and are mean-pooled over the image.
    """

    modality = Modality.IMAGE

    def __init__(self, *, dim: int = 256, patch: int = 4, seed: int = 0) -> None:
        self.dim = dim
        self.patch = patch
        self.seed = seed

    @property
    def id(self) -> str:
        return f"random-patch-d{self.dim}-p{self.patch}"

    def _weights(self, width: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        rng = Rng(self.seed, FEATURE_STREAM)
        weight = rng.generator.standard_normal((width, self.dim)) / np.sqrt(width)
        bias = rng.generator.standard_normal(self.dim) * 0.1
        return weight, bias

    def _patches(self, images: NDArray[np.float64]) -> NDArray[np.float64]:
        n, height, width, channels = images.shape
        p = self.patch
        rows, cols = height // p, width // p
        if rows == 0 or cols == 0:
            raise DegenerateInputError(f"Images of {height}x{width} are smaller than one {p}x{p} patch")
        cropped = images[:, : rows * p, : cols * p, :]
        patches = cropped.reshape(n, rows, p, cols, p, channels).transpose(0, 1, 3, 2, 4, 5)
        patches = patches.reshape(n, rows * cols, p * p * channels)
        cy, cx = np.meshgrid((np.arange(rows) + 0.5) / rows * 2 - 1, (np.arange(cols) + 0.5) / cols * 2 - 1, indexing="ij")
        centres = np.broadcast_to(np.stack([cy, cx], axis=-1).reshape(1, rows * cols, 2), (n, rows * cols, 2))
        return np.concatenate([patches * 2.0 - 1.0, centres], axis=-1)

    def __call__(self, samples: Sequence[NDArray[np.floating]]) -> NDArray[np.float64]:
        images = np.stack([np.asarray(s, dtype=np.float64) for s in samples])
        weight, bias = self._weights(images.shape[-1] * self.patch * self.patch + 2)
        out = np.empty((len(images), self.dim))
        for start in range(0, len(images), _CHUNK):
            patches = self._patches(images[start : start + _CHUNK])
            out[start : start + _CHUNK] = _relu(patches @ weight + bias).mean(axis=1)
        return out


class PointCloudExtractor:
    """Point clouds to features: a frozen random two-layer per-point MLP followed by max pooling over points."""

    modality = Modality.SDF

    def __init__(self, *, dim: int = 256, hidden: int = 64, seed: int = 0) -> None:
        self.dim = dim
        self.hidden = hidden
        self.seed = seed

    @property
    def id(self) -> str:
        return f"random-pointmlp-d{self.dim}-h{self.hidden}"

    def __call__(self, samples: Sequence[NDArray[np.floating]]) -> NDArray[np.float64]:
        rng = Rng(self.seed, FEATURE_STREAM + 1)
        w1 = rng.generator.standard_normal((3, self.hidden)) / np.sqrt(3.0)
        b1 = rng.generator.standard_normal(self.hidden) * 0.1
        w2 = rng.generator.standard_normal((self.hidden, self.dim)) / np.sqrt(self.hidden)
        b2 = rng.generator.standard_normal(self.dim) * 0.1
        out = np.empty((len(samples), self.dim))
        for i, cloud in enumerate(samples):
            points = np.asarray(cloud, dtype=np.float64)
            out[i] = _relu(_relu(points @ w1 + b1) @ w2 + b2).max(axis=0)
        return out


def build_extractor(modality: Modality, *, dim: int, seed: int, patch: int = 4, hidden: int = 64) -> FeatureExtractor:
    match modality:
        case Modality.IMAGE:
            return PatchExtractor(dim=dim, patch=patch, seed=seed)
        case Modality.SDF:
            return PointCloudExtractor(dim=dim, hidden=hidden, seed=seed)


def _sample_modality(sample: NDArray) -> Modality | None:
    if sample.ndim == 3:
        return Modality.IMAGE
    if sample.ndim == 2 and sample.shape[1] == 3 and len(sample) > 0:
        return Modality.SDF
    return None


def extract_features(samples: Sequence[ArrayLike], extractor: FeatureExtractor) -> FeatureSet:
    if not samples:
        raise DegenerateInputError("No samples to extract features from")
    arrays = [np.asarray(s) for s in samples]
    for index, array in enumerate(arrays):
        if _sample_modality(array) is not extractor.modality:
            raise ShapeMismatchError(f"extract_features[{index}] for {extractor.modality}", array.shape)
    if extractor.modality is Modality.IMAGE and len({a.shape for a in arrays}) > 1:
        raise ShapeMismatchError("extract_features", *sorted({a.shape for a in arrays}))
    LOGGER.debug("Extracting %s features of %d samples", extractor.id, len(arrays))
    return FeatureSet(features=extractor(arrays), extractor=extractor.id, seed=extractor.seed)


def normalize_features(generated: FeatureSet, reference: FeatureSet) -> tuple[FeatureSet, FeatureSet]:
    """Shift and scale both sets by the scalar mean and standard deviation over every entry of the reference."""
    if generated.normalized or reference.normalized:
        raise ConfigurationError("Feature sets are already normalized")
    if (generated.extractor, generated.seed) != (reference.extractor, reference.seed):
        raise ConfigurationError(
            f"Feature sets come from different extractors: {generated.extractor}/{generated.seed} "
            f"vs {reference.extractor}/{reference.seed}",
        )
    if generated.dim != reference.dim:
        raise ShapeMismatchError("normalize_features", generated.features.shape, reference.features.shape)
    mean = float(reference.features.mean())
    std = float(reference.features.std())
    if not std > 0.0:
        raise DegenerateInputError("Reference features are constant; cannot normalize")

    def apply(fs: FeatureSet) -> FeatureSet:
        return replace(
            fs,
            features=(fs.features - mean) / std,
            normalized=True,
            reference_mean=mean,
            reference_std=std,
        )

    return apply(generated), apply(reference)
