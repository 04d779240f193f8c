__all__ = ["MetricReport", "generation_metrics"]

import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from weightspace.datastore import Modality
from weightspace.genmetrics.configuration import MetricsConfiguration
from weightspace.genmetrics.distances import POLYNOMIAL_DEGREE, POLYNOMIAL_OFFSET, KernelKind, frechet_distance, mmd
from weightspace.genmetrics.features import build_extractor, extract_features, normalize_features
from weightspace.genmetrics.trio import DistanceTrio, distance_trio
from weightspace.geometry import CHAMFER_CONVENTION

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, kw_only=True)
class MetricReport:
    modality: Modality
    generated_count: int
    reference_count: int
    extractor: str
    extractor_seed: int
    fd: float
    mmd_gaussian: float
    mmd_polynomial: float
    trio: DistanceTrio | None = None
    conventions: dict

    def row(self) -> dict:
        """Flat record for CSV output; the trio columns are empty for images."""
        trio = self.trio
        return {
            "modality": str(self.modality),
            "generated": self.generated_count,
            "reference": self.reference_count,
            "extractor": self.extractor,
            "extractor_seed": self.extractor_seed,
            "fd": self.fd,
            "mmd_g": self.mmd_gaussian,
            "mmd_p": self.mmd_polynomial,
            "mmd": "" if trio is None else trio.mmd,
            "cov": "" if trio is None else trio.coverage,
            "1nna": "" if trio is None else trio.one_nna,
        }

    def document(self) -> dict:
        body = asdict(self)
        body["modality"] = str(self.modality)
        return body


def generation_metrics(
    generated: Sequence[NDArray[np.floating]],
    reference: Sequence[NDArray[np.floating]],
    modality: Modality,
    config: MetricsConfiguration,
) -> MetricReport:
    """
    Feature distances on reference-normalised features for both modalities, plus the Chamfer trio when the samples
    are point clouds.
    """
    extractor = build_extractor(
        modality,
        dim=config.feature_dim,
        seed=config.extractor_seed,
        patch=config.patch_size,
        hidden=config.point_hidden,
    )
    gen_features, ref_features = normalize_features(
        extract_features(generated, extractor),
        extract_features(reference, extractor),
    )
    p, q = gen_features.features, ref_features.features
    n_feature = p.shape[1]
    report = MetricReport(
        modality=modality,
        generated_count=len(generated),
        reference_count=len(reference),
        extractor=extractor.id,
        extractor_seed=extractor.seed,
        fd=frechet_distance(p, q),
        mmd_gaussian=mmd(p, q, KernelKind.GAUSSIAN, estimator=config.estimator, block=config.block_size),
        mmd_polynomial=mmd(p, q, KernelKind.POLYNOMIAL, estimator=config.estimator, block=config.block_size),
        trio=distance_trio(generated, reference) if modality is Modality.SDF else None,
        conventions={
            "normalization": {"mean": ref_features.reference_mean, "std": ref_features.reference_std},
            "mmd_estimator": str(config.estimator),
            "polynomial_kernel": {"gamma": 1.0 / n_feature, "degree": POLYNOMIAL_DEGREE, "offset": POLYNOMIAL_OFFSET},
            "gaussian_kernel": {"sigma": float(n_feature)},
            "fd_scale": "divided by feature dimension",
            "chamfer": CHAMFER_CONVENTION,
            "one_nna_ties": "opposite set",
        },
    )
    LOGGER.info("FD %.4g, MMD-G %.4g, MMD-P %.4g", report.fd, report.mmd_gaussian, report.mmd_polynomial)
    return report
