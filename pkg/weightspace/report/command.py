"""
The `report` command. It aggregates the artifacts of earlier commands into table-shaped CSVs and never recomputes
anything: every file it reads is checked against the manifest of the command that wrote it. Tables whose upstream
command has not run are skipped.
"""

__all__ = [
    "GENERATION_COLUMNS",
    "PROBE_SUMMARY_COLUMNS",
    "RECONSTRUCTION_COLUMNS",
    "STRUCTURE_COLUMNS",
    "report_command",
    "summarize_probes",
]

import json
import logging
from collections.abc import Callable
from pathlib import Path

import numpy as np

from toolkit.exceptions import ArtifactError
from weightspace.config import RunContext
from weightspace.datastore import manifest_path, read_weightdataset

from .tables import read_table, write_table

LOGGER = logging.getLogger(__name__)

RECONSTRUCTION_COLUMNS = ("parameterization", "params", "records", "failed", "metric", "mean", "std")
GENERATION_COLUMNS = (
    "parameterization",
    "modality",
    "generated",
    "reference",
    "fd",
    "mmd_g",
    "mmd_p",
    "mmd",
    "cov",
    "1nna",
)
PROBE_SUMMARY_COLUMNS = (
    "parameterization",
    "runs",
    "knn_mean",
    "knn_std",
    "logistic_mean",
    "logistic_std",
    "ari_mean",
    "ari_std",
)
STRUCTURE_COLUMNS = (
    "parameterization",
    "lam",
    "trials",
    "similarity_mean",
    "similarity_std",
    "barrier_mean",
    "barrier_std",
)


def _mean_std(values: list[float]) -> tuple[float, float]:
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())


def _outputs(ctx: RunContext, producer: str, suffix: str) -> list[Path]:
    return sorted(p for p in ctx.consume_all(producer) if p.name.endswith(suffix))


def _reconstruction(ctx: RunContext) -> list[dict]:
    rows = []
    for path in _outputs(ctx, "fit", ".wsd"):
        dataset = read_weightdataset(path)
        reports = json.loads(path.with_suffix(".fits.json").read_text(encoding="utf-8"))
        mean, std = _mean_std([r.metric for r in dataset.records]) if len(dataset) else (float("nan"), float("nan"))
        rows.append(
            {
                "parameterization": dataset.parameterization,
                "params": dataset.record_length,
                "records": len(dataset),
                "failed": len(reports["failures"]),
                "metric": dataset.metric_name,
                "mean": mean,
                "std": std,
            },
        )
    return rows


def _generation(ctx: RunContext) -> list[dict]:
    rows = []
    for path in _outputs(ctx, "metrics", ".json"):
        document = json.loads(path.read_text(encoding="utf-8"))
        trio = document.get("trio") or {}
        rows.append(
            {
                "parameterization": document["parameterization"],
                "modality": document["modality"],
                "generated": document["generated_count"],
                "reference": document["reference_count"],
                "fd": document["fd"],
                "mmd_g": document["mmd_gaussian"],
                "mmd_p": document["mmd_polynomial"],
                "mmd": trio.get("mmd"),
                "cov": trio.get("coverage"),
                "1nna": trio.get("one_nna"),
            },
        )
    return rows


def summarize_probes(rows: list[dict[str, str]]) -> list[dict]:
    """Mean and standard deviation of every probe score per parameterization, in first-seen order."""
    grouped: dict[str, list[dict[str, str]]] = {}
    for row in rows:
        grouped.setdefault(row["parameterization"], []).append(row)
    summary = []
    for parameterization, runs in grouped.items():
        record: dict = {"parameterization": parameterization, "runs": len(runs)}
        for name, column in (("knn", "knn_accuracy"), ("logistic", "logistic_accuracy"), ("ari", "ari")):
            record[f"{name}_mean"], record[f"{name}_std"] = _mean_std([float(run[column]) for run in runs])
        summary.append(record)
    return summary


def _probes(ctx: RunContext) -> list[dict]:
    return [row for path in _outputs(ctx, "analyze", "probes.csv") for row in summarize_probes(read_table(path))]


def _structure(ctx: RunContext) -> list[dict]:
    return [
        {column: row[column] for column in STRUCTURE_COLUMNS}
        for path in _outputs(ctx, "analyze", "perturbation.csv")
        for row in read_table(path)
    ]


TABLES: dict[str, tuple[str, tuple[str, ...], Callable[[RunContext], list[dict]]]] = {
    "reconstruction.csv": ("fit", RECONSTRUCTION_COLUMNS, _reconstruction),
    "generation.csv": ("metrics", GENERATION_COLUMNS, _generation),
    "probes.csv": ("analyze", PROBE_SUMMARY_COLUMNS, _probes),
    "structure.csv": ("analyze", STRUCTURE_COLUMNS, _structure),
}


async def report_command(ctx: RunContext) -> dict:
    root = ctx.layout.root
    written = {}
    for name, (producer, columns, collect) in TABLES.items():
        if not manifest_path(root, producer).exists():
            LOGGER.info("Skipping %s: `%s` has not run", name, producer)
            continue
        rows = collect(ctx)
        if not rows:
            LOGGER.info("Skipping %s: no %s artifacts", name, producer)
            continue
        ctx.produce(write_table(ctx.layout.report_dir / name, columns, rows))
        written[name] = len(rows)
    if not written:
        raise ArtifactError(manifest_path(root, "fit"), "fit")
    return ctx.finish(tables=written)
