import json

import pytest

from toolkit.exceptions import ArtifactError, HashMismatchError
from weightspace.config import RunContext, load_run_config
from weightspace.report import read_table, write_table
from weightspace.report.command import PROBE_SUMMARY_COLUMNS, report_command, summarize_probes
from weightspace.wsanalysis.command import PERTURBATION_COLUMNS, PROBE_COLUMNS


@pytest.fixture()
def registry(tmp_path):
    return load_run_config(overrides=[f"core.output_dir={json.dumps(str(tmp_path))}"])


def _publish(registry, command, *paths):
    ctx = RunContext(command=command, registry=registry)
    ctx.produce(*paths)
    ctx.finish()


def _analysis_tables(root):
    probes = write_table(
        root / "analysis" / "probes.csv",
        PROBE_COLUMNS,
        [
            {"parameterization": "mlp", "split_seed": 0, "knn_accuracy": 0.5, "logistic_accuracy": 0.25, "ari": 0.0},
            {"parameterization": "mlp", "split_seed": 1, "knn_accuracy": 0.7, "logistic_accuracy": 0.75, "ari": 0.2},
            {"parameterization": "mlora", "split_seed": 0, "knn_accuracy": 1.0, "logistic_accuracy": 1.0, "ari": 1.0},
        ],
    )
    perturbation = write_table(
        root / "analysis" / "perturbation.csv",
        PERTURBATION_COLUMNS,
        [
            {
                "parameterization": "mlp",
                "lam": lam,
                "trials": 2,
                "similarity_mean": 1.0 - lam,
                "similarity_std": 0.0,
                "barrier_mean": lam,
                "barrier_std": 0.0,
                "flagged": 0,
            }
            for lam in (0.0, 0.5)
        ],
    )
    return probes, perturbation


@pytest.mark.unit()
def test_summarize_probes():
    rows = [
        {"parameterization": "mlp", "knn_accuracy": "0.5", "logistic_accuracy": "0.25", "ari": "0"},
        {"parameterization": "mlp", "knn_accuracy": "0.7", "logistic_accuracy": "0.75", "ari": "0.2"},
        {"parameterization": "mlora", "knn_accuracy": "1", "logistic_accuracy": "1", "ari": "1"},
    ]
    mlp, mlora = summarize_probes(rows)
    assert mlp["parameterization"] == "mlp"
    assert mlp["runs"] == 2
    assert mlp["knn_mean"] == pytest.approx(0.6)
    assert mlp["knn_std"] == pytest.approx(0.1)
    assert mlp["logistic_std"] == pytest.approx(0.25)
    assert mlora["ari_mean"] == 1.0
    assert mlora["ari_std"] == 0.0


@pytest.mark.unit()
async def test_report_without_artifacts_names_the_first_stage(registry):
    with pytest.raises(ArtifactError) as error:
        await report_command(RunContext(command="report", registry=registry))
    assert error.value.producer == "fit"


@pytest.mark.unit()
async def test_report_aggregates_analysis_tables(registry, tmp_path):
    _publish(registry, "analyze", *_analysis_tables(tmp_path))
    record = await report_command(RunContext(command="report", registry=registry))
    assert record["tables"] == {"probes.csv": 2, "structure.csv": 2}
    summary = read_table(tmp_path / "report" / "probes.csv")
    assert list(summary[0]) == list(PROBE_SUMMARY_COLUMNS)
    assert summary[0]["knn_mean"] == "0.6"
    structure = read_table(tmp_path / "report" / "structure.csv")
    assert [row["lam"] for row in structure] == ["0", "0.5"]
    assert "flagged" not in structure[0]


@pytest.mark.unit()
async def test_report_refuses_modified_artifacts(registry, tmp_path):
    probes, _ = _analysis_tables(tmp_path)
    _publish(registry, "analyze", probes)
    probes.write_text(probes.read_text().replace("0.5", "0.9"))
    with pytest.raises(HashMismatchError):
        await report_command(RunContext(command="report", registry=registry))


@pytest.mark.unit()
async def test_report_is_byte_identical_across_runs(registry, tmp_path):
    _publish(registry, "analyze", *_analysis_tables(tmp_path))
    await report_command(RunContext(command="report", registry=registry))
    first = (tmp_path / "report" / "probes.csv").read_bytes()
    await report_command(RunContext(command="report", registry=registry))
    assert (tmp_path / "report" / "probes.csv").read_bytes() == first
