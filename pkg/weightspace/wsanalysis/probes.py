"""
Discriminative probes over weight-space representations: cosine nearest neighbours, multinomial logistic
regression, k-means agreement with the labels, and a PCA embedding for plots.
"""

__all__ = [
    "SPLIT_STREAM",
    "KMeansResult",
    "LogisticModel",
    "PcaProjection",
    "ProbeReport",
    "adjusted_rand_index",
    "kmeans",
    "knn_classify",
    "logistic_train",
    "pca_project",
    "probe_runs",
    "run_probes",
    "summarize",
]

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import torch
from numpy.typing import ArrayLike, NDArray
from sklearn.cluster import KMeans
from sklearn.decomposition import PCA
from sklearn.metrics import adjusted_rand_score, confusion_matrix

from toolkit.exceptions import DegenerateInputError, ShapeMismatchError
from weightspace.numerics import LrSchedule, Rng, ScheduleKind

LOGGER = logging.getLogger(__name__)

SPLIT_STREAM: int = 0x73706C74
_ARMIJO = 1e-4
_MAX_HALVINGS = 30
_STD_FLOOR = 1e-8


def _unit_rows(x: NDArray[np.float64], what: str) -> NDArray[np.float64]:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise DegenerateInputError(f"Cosine neighbours need nonzero {what} representations")
    return x / norms


def knn_classify(
    train: ArrayLike,
    labels: ArrayLike,
    test: ArrayLike,
    *,
    k: int = 1,
) -> NDArray[np.int64]:
    """
    Majority label among the k most cosine-similar training rows. Similarity ties go to the lowest training index;
    vote ties go to the label of the nearer neighbour.
    """
    x_train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    x_test = np.atleast_2d(np.asarray(test, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64)
    if x_train.shape[0] == 0:
        raise DegenerateInputError("Nearest-neighbour classification needs training representations")
    if y.shape != (x_train.shape[0],):
        raise ShapeMismatchError("knn_classify", y.shape, (x_train.shape[0],))
    if x_test.shape[1] != x_train.shape[1]:
        raise ShapeMismatchError("knn_classify", x_test.shape, x_train.shape)
    similarity = _unit_rows(x_test, "test") @ _unit_rows(x_train, "training").T
    order = np.argsort(-similarity, axis=1, kind="stable")[:, : min(k, x_train.shape[0])]
    predictions = np.empty(x_test.shape[0], dtype=np.int64)
    for row, neighbours in enumerate(order):
        votes = y[neighbours]
        counts = {label: int(np.sum(votes == label)) for label in votes}
        best = max(counts.values())
        predictions[row] = next(label for label in votes if counts[label] == best)
    return predictions


@dataclass(frozen=True, kw_only=True)
class LogisticModel:
    weight: NDArray[np.float64]
    """(classes, features) on standardised inputs."""
    bias: NDArray[np.float64]
    mean: NDArray[np.float64]
    scale: NDArray[np.float64]
    losses: list[float] = field(default_factory=list)

    def logits(self, x: ArrayLike) -> NDArray[np.float64]:
        z = (np.atleast_2d(np.asarray(x, dtype=np.float64)) - self.mean) / self.scale
        return z @ self.weight.T + self.bias

    def predict(self, x: ArrayLike) -> NDArray[np.int64]:
        return np.argmax(self.logits(x), axis=1).astype(np.int64)


def logistic_train(
    reps: ArrayLike,
    labels: ArrayLike,
    *,
    num_classes: int | None = None,
    l2: float = 1e-3,
    epochs: int = 2000,
    lr: float = 0.1,
) -> LogisticModel:
    """
    Multinomial logistic regression by full-batch gradient descent on standardised features.

    The step size follows a cosine decay from `lr`, and every step backtracks until the loss decreases, so the
    training loss never increases.
    """
    x = np.atleast_2d(np.asarray(reps, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (x.shape[0],):
        raise ShapeMismatchError("logistic_train", y.shape, (x.shape[0],))
    if len(np.unique(y)) < 2:
        raise DegenerateInputError("Logistic regression needs samples of at least two classes")
    classes = num_classes or int(y.max()) + 1

    mean = x.mean(axis=0)
    scale = np.maximum(x.std(axis=0), _STD_FLOOR)
    features = torch.from_numpy((x - mean) / scale)
    targets = torch.from_numpy(y)
    weight = torch.zeros(classes, x.shape[1], dtype=torch.float64, requires_grad=True)
    bias = torch.zeros(classes, dtype=torch.float64, requires_grad=True)

    def objective() -> torch.Tensor:
        logits = features @ weight.T + bias
        return torch.nn.functional.cross_entropy(logits, targets) + l2 * torch.sum(weight * weight)

    schedule = LrSchedule(kind=ScheduleKind.COSINE, start=lr, end=lr * 1e-2, total_steps=epochs)
    loss = objective()
    losses = [float(loss)]
    for epoch in range(epochs):
        grad_w, grad_b = torch.autograd.grad(loss, [weight, bias])
        squared = float(torch.sum(grad_w * grad_w) + torch.sum(grad_b * grad_b))
        if squared < 1e-20:
            break
        step = schedule.rate(epoch)
        with torch.no_grad():
            w0, b0 = weight.detach().clone(), bias.detach().clone()
            for _ in range(_MAX_HALVINGS):
                weight.copy_(w0 - step * grad_w)
                bias.copy_(b0 - step * grad_b)
                trial = float(objective())
                if trial <= losses[-1] - _ARMIJO * step * squared:
                    break
                step *= 0.5
            else:
                weight.copy_(w0)
                bias.copy_(b0)
                break
        loss = objective()
        losses.append(float(loss))
    LOGGER.debug("Logistic regression: %d steps, loss %.4g -> %.4g", len(losses) - 1, losses[0], losses[-1])
    return LogisticModel(
        weight=weight.detach().numpy(),
        bias=bias.detach().numpy(),
        mean=mean,
        scale=scale,
        losses=losses,
    )


@dataclass(frozen=True, kw_only=True)
class KMeansResult:
    labels: NDArray[np.int64]
    centers: NDArray[np.float64]
    inertia: float


def kmeans(reps: ArrayLike, k: int, *, restarts: int = 10, seed: int = 0) -> KMeansResult:
    """k-means++ seeding and Lloyd iterations; the restart with the lowest inertia wins."""
    x = np.atleast_2d(np.asarray(reps, dtype=np.float64))
    if x.shape[0] < k:
        raise DegenerateInputError(f"k-means with k={k} needs at least {k} points, got {x.shape[0]}")
    model = KMeans(n_clusters=k, init="k-means++", n_init=restarts, random_state=seed % 2**32, algorithm="lloyd")
    assignments = model.fit_predict(x)
    return KMeansResult(labels=assignments.astype(np.int64), centers=model.cluster_centers_, inertia=float(model.inertia_))


def adjusted_rand_index(predicted: ArrayLike, truth: ArrayLike) -> float:
    a = np.asarray(predicted)
    b = np.asarray(truth)
    if a.shape != b.shape:
        raise ShapeMismatchError("adjusted_rand_index", a.shape, b.shape)
    return float(adjusted_rand_score(b, a))


@dataclass(frozen=True, kw_only=True)
class PcaProjection:
    coords: NDArray[np.float64]
    components: NDArray[np.float64]
    explained_variance: NDArray[np.float64]
    mean: NDArray[np.float64]


def pca_project(reps: ArrayLike, dims: int = 2) -> PcaProjection:
    """
    Projection onto the leading `dims` principal directions. Centered data has at most min(samples - 1, features)
    of them; the remaining coordinates, components and variances are zero.
    """
    x = np.atleast_2d(np.asarray(reps, dtype=np.float64))
    samples, features = x.shape
    coords = np.zeros((samples, dims))
    components = np.zeros((dims, features))
    explained_variance = np.zeros(dims)
    mean = x.mean(axis=0) if samples else np.zeros(features)
    kept = min(dims, samples - 1, features)
    if kept > 0:
        pca = PCA(n_components=kept, svd_solver="full")
        coords[:, :kept] = pca.fit_transform(x)
        components[:kept] = pca.components_
        explained_variance[:kept] = pca.explained_variance_
        mean = pca.mean_
    return PcaProjection(coords=coords, components=components, explained_variance=explained_variance, mean=mean)


@dataclass(frozen=True, kw_only=True)
class ProbeReport:
    split_seed: int
    knn_accuracy: float
    logistic_accuracy: float
    ari: float
    confusion: list[list[int]]
    """Nearest-neighbour confusion counts, rows are true classes."""


def _split(labels: NDArray[np.int64], test_fraction: float, rng: Rng) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    order = rng.permutation(labels.size)
    test_count = min(max(1, round(labels.size * test_fraction)), labels.size - 1)
    return np.sort(order[test_count:]), np.sort(order[:test_count])


def run_probes(
    matrix: ArrayLike,
    labels: ArrayLike,
    *,
    split_seed: int,
    test_fraction: float = 0.2,
    knn_k: int = 1,
    l2: float = 1e-3,
    epochs: int = 2000,
    lr: float = 0.1,
    restarts: int = 10,
) -> ProbeReport:
    """One random train/test split: nearest neighbours and logistic regression on it, k-means on everything."""
    x = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64)
    if np.any(y < 0):
        raise DegenerateInputError("Probes need every representation to carry a label")
    if y.size < 2:
        raise DegenerateInputError("Probes need at least two labelled representations")
    classes = int(y.max()) + 1
    train, test = _split(y, test_fraction, Rng(split_seed, SPLIT_STREAM))

    knn = knn_classify(x[train], y[train], x[test], k=knn_k)
    model = logistic_train(x[train], y[train], num_classes=classes, l2=l2, epochs=epochs, lr=lr)
    clusters = kmeans(x, min(classes, x.shape[0]), restarts=restarts, seed=split_seed)
    return ProbeReport(
        split_seed=split_seed,
        knn_accuracy=float(np.mean(knn == y[test])),
        logistic_accuracy=float(np.mean(model.predict(x[test]) == y[test])),
        ari=adjusted_rand_index(clusters.labels, y),
        confusion=confusion_matrix(y[test], knn, labels=list(range(classes))).tolist(),
    )


def probe_runs(
    matrix: ArrayLike,
    labels: ArrayLike,
    *,
    runs: int,
    seed: int,
    **options: object,
) -> list[ProbeReport]:
    """`runs` independent splits with seeds seed, seed + 1, ..."""
    reports = [run_probes(matrix, labels, split_seed=seed + run, **options) for run in range(runs)]  # type: ignore[arg-type]
    LOGGER.info(
        "Probes over %d splits: 1-NN %.3f, logistic %.3f, ARI %.3f",
        runs,
        np.mean([r.knn_accuracy for r in reports]),
        np.mean([r.logistic_accuracy for r in reports]),
        np.mean([r.ari for r in reports]),
    )
    return reports


def summarize(reports: Sequence[ProbeReport]) -> dict[str, tuple[float, float]]:
    """Mean and standard deviation of every probe metric across splits."""
    summary = {}
    for metric in ("knn_accuracy", "logistic_accuracy", "ari"):
        values = np.asarray([getattr(r, metric) for r in reports], dtype=np.float64)
        summary[metric] = (float(values.mean()), float(values.std()))
    return summary
