__all__ = ["AnalysisExperiment", "analyze_command"]

import logging
from dataclasses import asdict
from enum import StrEnum
from functools import partial

import trio

from weightspace.config import RunContext
from weightspace.datastore import WeightDataset, read_weightdataset
from weightspace.datastore.command import load_instances
from weightspace.fitting.command import space_for
from weightspace.fitting.configuration import FittingConfiguration
from weightspace.report import write_table

from .configuration import AnalysisConfiguration
from .probes import pca_project, probe_runs
from .structure import perturbation_experiment

LOGGER = logging.getLogger(__name__)

PERTURBATION_COLUMNS = (
    "parameterization",
    "lam",
    "trials",
    "similarity_mean",
    "similarity_std",
    "barrier_mean",
    "barrier_std",
    "flagged",
)
PROBE_COLUMNS = ("parameterization", "split_seed", "knn_accuracy", "logistic_accuracy", "ari")


class AnalysisExperiment(StrEnum):
    PERTURBATION = "perturbation"
    PROBES = "probes"
    EMBEDDING = "embedding"


async def _perturbation(ctx: RunContext, analysis: AnalysisConfiguration) -> dict:
    instances = load_instances(ctx)
    fitting: FittingConfiguration = ctx.section("fitting")
    spaces = [space_for(ctx, parameterization, instances) for parameterization in analysis.parameterizations]
    rows = await perturbation_experiment(
        spaces,
        instances,
        analysis.lambdas,
        fitting,
        seed=ctx.seed,
        trials=analysis.trials,
        barrier_resolution=analysis.barrier_resolution,
        jobs=ctx.jobs,
    )
    path = write_table(ctx.layout.analysis_dir / "perturbation.csv", PERTURBATION_COLUMNS, [asdict(r) for r in rows])
    ctx.produce(path)
    return {"rows": len(rows)}


def _datasets(ctx: RunContext, analysis: AnalysisConfiguration) -> list[WeightDataset]:
    return [
        read_weightdataset(ctx.consume(ctx.layout.weights(p.value), "fit")) for p in analysis.parameterizations
    ]


async def _probes(ctx: RunContext, analysis: AnalysisConfiguration) -> dict:
    rows = []
    for dataset in _datasets(ctx, analysis):
        reports = await trio.to_thread.run_sync(
            partial(
                probe_runs,
                dataset.matrix(),
                dataset.labels(),
                runs=analysis.probe_runs,
                seed=ctx.seed,
                test_fraction=analysis.test_fraction,
                knn_k=analysis.knn_k,
                l2=analysis.logistic_l2,
                epochs=analysis.logistic_steps,
                lr=analysis.logistic_lr,
                restarts=analysis.kmeans_restarts,
            ),
        )
        rows += [{"parameterization": dataset.parameterization} | asdict(report) for report in reports]
    ctx.produce(write_table(ctx.layout.analysis_dir / "probes.csv", PROBE_COLUMNS, rows))
    return {"rows": len(rows)}


async def _embedding(ctx: RunContext, analysis: AnalysisConfiguration) -> dict:
    columns = ["parameterization", "instance_id", "label"] + [f"pc{i + 1}" for i in range(analysis.pca_dims)]
    rows = []
    for dataset in _datasets(ctx, analysis):
        projection = pca_project(dataset.matrix(), analysis.pca_dims)
        for record, coords in zip(dataset.records, projection.coords, strict=True):
            row: dict = {
                "parameterization": dataset.parameterization,
                "instance_id": record.instance_id,
                "label": record.label,
            }
            rows.append(row | {f"pc{i + 1}": float(c) for i, c in enumerate(coords)})
    ctx.produce(write_table(ctx.layout.analysis_dir / "embedding.csv", columns, rows))
    return {"rows": len(rows)}


async def analyze_command(ctx: RunContext, experiments: list[AnalysisExperiment] | None = None) -> dict:
    analysis: AnalysisConfiguration = ctx.section("analysis")
    summary = {}
    for experiment in experiments or list(AnalysisExperiment):
        LOGGER.info("Running the %s analysis", experiment)
        match experiment:
            case AnalysisExperiment.PERTURBATION:
                summary[experiment.value] = await _perturbation(ctx, analysis)
            case AnalysisExperiment.PROBES:
                summary[experiment.value] = await _probes(ctx, analysis)
            case AnalysisExperiment.EMBEDDING:
                summary[experiment.value] = await _embedding(ctx, analysis)
    return ctx.finish(**summary)
