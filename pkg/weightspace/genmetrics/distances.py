__all__ = [
    "KernelKind",
    "MmdEstimator",
    "NEGATIVE_TOLERANCE",
    "POLYNOMIAL_DEGREE",
    "POLYNOMIAL_OFFSET",
    "frechet_distance",
    "frechet_from_moments",
    "kernel_matrix",
    "kernel_value",
    "mmd",
    "mmd_brute_force",
]

import logging
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import eigh
from sklearn.metrics.pairwise import polynomial_kernel, rbf_kernel

from toolkit.exceptions import DegenerateInputError, NonFiniteError, ShapeMismatchError

LOGGER = logging.getLogger(__name__)

NEGATIVE_TOLERANCE: float = 1e-6

POLYNOMIAL_DEGREE: int = 3
POLYNOMIAL_OFFSET: float = 1.0


class KernelKind(StrEnum):
    POLYNOMIAL = "polynomial"
    GAUSSIAN = "gaussian"


class MmdEstimator(StrEnum):
    UNBIASED = "unbiased"
    BIASED = "biased"


def _pair(p: ArrayLike, q: ArrayLike, op: str) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    x = np.asarray(p, dtype=np.float64)
    y = np.asarray(q, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ShapeMismatchError(op, x.shape, y.shape)
    if len(x) < 2 or len(y) < 2:
        raise DegenerateInputError(f"{op} needs at least 2 samples per set, got {len(x)} and {len(y)}")
    return x, y


def _sqrtm_psd(matrix: NDArray[np.float64]) -> NDArray[np.float64]:
    values, vectors = eigh(matrix)
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.T


def frechet_from_moments(
    mu_p: NDArray[np.float64],
    cov_p: NDArray[np.float64],
    mu_q: NDArray[np.float64],
    cov_q: NDArray[np.float64],
) -> float:
    """
    Fréchet distance between two Gaussians, divided by the dimension.

    The trace of (Σ_P Σ_Q)^{1/2} is taken from the eigenvalues of Σ_P^{1/2} Σ_Q Σ_P^{1/2}, which is symmetric and
    positive semi-definite; eigenvalues are clamped at 0 and anything below -1e-6 (relative) is rejected.
    """
    dim = len(mu_p)
    root_p = _sqrtm_psd(cov_p)
    middle = root_p @ cov_q @ root_p
    values = eigh((middle + middle.T) / 2.0, eigvals_only=True)
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    if np.any(values < -NEGATIVE_TOLERANCE * scale):
        raise NonFiniteError(f"Covariance product has a negative eigenvalue {values.min():.3g}")
    trace_sqrt = float(np.sqrt(np.clip(values, 0.0, None)).sum())
    diff = mu_p - mu_q
    value = (float(diff @ diff) + float(np.trace(cov_p)) + float(np.trace(cov_q)) - 2.0 * trace_sqrt) / dim
    if value < -NEGATIVE_TOLERANCE:
        raise NonFiniteError(f"Fréchet distance evaluated to {value:.3g}")
    return max(value, 0.0)


def frechet_distance(p: ArrayLike, q: ArrayLike) -> float:
    x, y = _pair(p, q, "frechet_distance")
    return frechet_from_moments(
        x.mean(axis=0),
        np.atleast_2d(np.cov(x, rowvar=False)),
        y.mean(axis=0),
        np.atleast_2d(np.cov(y, rowvar=False)),
    )


def kernel_matrix(kind: KernelKind, x: NDArray[np.float64], y: NDArray[np.float64], n_feature: int) -> NDArray[np.float64]:
    match kind:
        case KernelKind.POLYNOMIAL:
            return polynomial_kernel(x, y, degree=POLYNOMIAL_DEGREE, gamma=1.0 / n_feature, coef0=POLYNOMIAL_OFFSET)
        case KernelKind.GAUSSIAN:
            sigma = float(n_feature)
            return rbf_kernel(x, y, gamma=1.0 / (2.0 * sigma * sigma))


def kernel_value(kind: KernelKind, x: NDArray[np.float64], y: NDArray[np.float64], n_feature: int) -> float:
    match kind:
        case KernelKind.POLYNOMIAL:
            return float((float(x @ y) / n_feature + POLYNOMIAL_OFFSET) ** POLYNOMIAL_DEGREE)
        case KernelKind.GAUSSIAN:
            diff = x - y
            return float(np.exp(-float(diff @ diff) / (2.0 * float(n_feature) ** 2)))


def _blocked_sum(
    kind: KernelKind,
    x: NDArray[np.float64],
    y: NDArray[np.float64],
    n_feature: int,
    block: int,
    *,
    skip_diagonal: bool,
) -> float:
    total = 0.0
    for start in range(0, len(x), block):
        rows = kernel_matrix(kind, x[start : start + block], y, n_feature)
        total += float(rows.sum())
        if skip_diagonal:
            idx = np.arange(len(rows))
            total -= float(rows[idx, start + idx].sum())
    return total


def mmd(
    p: ArrayLike,
    q: ArrayLike,
    kind: KernelKind,
    *,
    estimator: MmdEstimator = MmdEstimator.UNBIASED,
    block: int = 256,
) -> float:
    """
    Squared maximum mean discrepancy. The unbiased estimator drops the diagonal of the within-set kernel sums and
    can be slightly negative when the two sets are close.
    """
    x, y = _pair(p, q, "mmd")
    n_feature = x.shape[1]
    m, n = len(x), len(y)
    unbiased = estimator is MmdEstimator.UNBIASED
    xx = _blocked_sum(kind, x, x, n_feature, block, skip_diagonal=unbiased)
    yy = _blocked_sum(kind, y, y, n_feature, block, skip_diagonal=unbiased)
    xy = _blocked_sum(kind, x, y, n_feature, block, skip_diagonal=False)
    if unbiased:
        return xx / (m * (m - 1)) + yy / (n * (n - 1)) - 2.0 * xy / (m * n)
    return xx / (m * m) + yy / (n * n) - 2.0 * xy / (m * n)


def mmd_brute_force(p: ArrayLike, q: ArrayLike, kind: KernelKind) -> float:
    """Pairwise double-loop evaluation of the unbiased estimator."""
    x, y = _pair(p, q, "mmd")
    n_feature = x.shape[1]
    m, n = len(x), len(y)
    a = sum(kernel_value(kind, x[i], x[j], n_feature) for i in range(m) for j in range(m) if i != j)
    b = sum(kernel_value(kind, y[i], y[j], n_feature) for i in range(n) for j in range(n) if i != j)
    c = sum(kernel_value(kind, x[i], y[j], n_feature) for i in range(m) for j in range(n))
    return a / (m * (m - 1)) + b / (n * (n - 1)) - 2.0 * c / (m * n)
