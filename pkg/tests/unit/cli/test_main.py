import json
from unittest.mock import patch

import pytest

from framework.__main__ import build_parser, command_overrides, run
from weightspace.datastore import read_manifest, read_netpbm, read_weightdataset
from weightspace.report import read_table
from weightspace.wsanalysis.command import AnalysisExperiment


@pytest.fixture(autouse=True)
def patch_configure_logging():
    with patch("framework.__main__.logging_init") as p:
        yield p


def _run(capsys, *argv: str) -> tuple[int, dict]:
    status = run(list(argv))
    lines = capsys.readouterr().out.strip().splitlines()
    return status, json.loads(lines[-1])


class Test_Parser:
    @pytest.mark.unit()
    def test_convenience_flags_become_overrides(self):
        args = build_parser().parse_args(
            ["fit", "--param", "mlora-asym", "--param", "mlp", "--jobs", "3", "--set", "fitting.rank=2"],
        )
        assert command_overrides(args) == [
            "fitting.rank=2",
            "core.jobs=3",
            'fitting.parameterizations=["mlora-asym", "mlp"]',
        ]

    @pytest.mark.unit()
    def test_analyze_experiments_and_lambdas(self):
        args = build_parser().parse_args(["analyze", "perturbation", "--lambdas", "0,0.5,1"])
        assert args.experiments == [AnalysisExperiment.PERTURBATION]
        assert command_overrides(args) == ['analysis.lambdas="0,0.5,1"']

    @pytest.mark.unit()
    def test_analyze_defaults_to_every_experiment(self):
        args = build_parser().parse_args(["analyze"])
        assert args.experiments == []

    @pytest.mark.unit()
    def test_unknown_parameterization_is_a_usage_error(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["fit", "--param", "siren"])

    @pytest.mark.unit()
    def test_report_takes_no_param(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["report", "--param", "mlp"])


class Test_ErrorRecords:
    @pytest.mark.unit()
    def test_missing_upstream_artifact(self, tmp_path, capsys, patch_configure_logging):
        status, record = _run(capsys, "fit", "--output-dir", str(tmp_path))
        assert status == 1
        assert record["status"] == "error"
        assert record["command"] == "fit"
        assert record["error"] == "ArtifactError"
        assert "weightspace gen-data" in record["message"]
        patch_configure_logging.assert_called_once()
        assert (tmp_path / "resolved_config.json").exists()

    @pytest.mark.unit()
    def test_invalid_configuration(self, tmp_path, capsys):
        status, record = _run(capsys, "gen-data", "--output-dir", str(tmp_path), "--set", "data.count=0")
        assert status == 1
        assert record["error"] == "ConfigurationError"
        assert "count" in record["message"]

    @pytest.mark.unit()
    def test_unknown_section(self, tmp_path, capsys):
        status, record = _run(capsys, "gen-data", "--output-dir", str(tmp_path), "--set", "training.steps=3")
        assert status == 1
        assert record["error"] == "ConfigurationError"

    @pytest.mark.unit()
    def test_missing_config_file(self, tmp_path, capsys):
        status, record = _run(capsys, "gen-data", "--config", str(tmp_path / "absent.json"))
        assert status == 1
        assert record["error"] == "ConfigurationError"

    @pytest.mark.unit()
    def test_unexpected_failures_exit_with_two(self, tmp_path, capsys):
        with patch("framework.__main__.main", side_effect=RuntimeError("boom")):
            status, record = _run(capsys, "gen-data", "--output-dir", str(tmp_path))
        assert status == 2
        assert record == {"status": "error", "command": "gen-data", "error": "RuntimeError", "message": "boom"}


@pytest.mark.integration()
def test_gen_data_writes_manifest_and_summary(tmp_path, capsys):
    status, record = _run(
        capsys,
        "gen-data",
        "--output-dir",
        str(tmp_path),
        "--set",
        "data.count=4",
        "--set",
        "data.resolution=8",
    )
    assert status == 0
    assert record["status"] == "ok"
    assert record["instances"] == 4
    manifest = read_manifest(tmp_path, "gen-data")
    assert manifest.config["data"]["count"] == 4
    assert {entry.path for entry in manifest.outputs} == set(record["outputs"])


PIPELINE_CONFIG = {
    "core": {"seed": 3, "jobs": 2},
    "data": {"count": 9, "resolution": 8, "channels": 1},
    "arch": {
        "omega0": 4.0,
        "standalone_width": 8,
        "hidden_layers": 1,
        "num_blocks": 1,
        "modulated_width": 8,
        "latent_dim": 4,
        "mapping_layers": 1,
        "mapping_width": 8,
    },
    "base": {
        "stages": [{"batch_size": 3, "points": 32, "steps": 4}],
        "schedule": "constant",
        "lr_start": 1e-3,
        "lr_end": 1e-3,
        "log_every": 1,
    },
    "fitting": {
        "parameterizations": ["mlp", "mlora"],
        "steps": 4,
        "points": 16,
        "lr_start": 1e-2,
        "lr_end": 1e-3,
        "rank": 2,
        "log_every": 1,
    },
    "analysis": {
        "lambdas": [0.0, 1.0],
        "trials": 2,
        "parameterizations": ["mlp", "mlora"],
        "probe_runs": 2,
        "test_fraction": 0.34,
        "logistic_steps": 5,
        "kmeans_restarts": 2,
    },
    "diffusion": {
        "parameterizations": ["mlora"],
        "timesteps": 10,
        "chunk_size": 8,
        "token_dim": 8,
        "depth": 1,
        "heads": 2,
        "batch_size": 4,
        "epochs": 2,
        "lr_start": 1e-3,
        "lr_end": 1e-3,
        "ddim_steps": 2,
        "samples": 4,
        "log_every": 1,
    },
    "metrics": {"feature_dim": 8, "patch_size": 4, "point_hidden": 8, "block_size": 4},
}


@pytest.mark.functional()
@pytest.mark.slow()
def test_image_pipeline_end_to_end(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps(PIPELINE_CONFIG))
    out = tmp_path / "out"
    common = ["--config", str(config), "--output-dir", str(out)]

    for command in ("gen-data", "train-base", "fit"):
        status, record = _run(capsys, command, *common)
        assert status == 0, record

    mlora = read_weightdataset(out / "weights" / "mlora.wsd")
    assert len(mlora) == 9
    assert mlora.base_hash is not None

    status, record = _run(capsys, "analyze", "probes", *common)
    assert status == 0, record
    status, record = _run(capsys, "analyze", "perturbation", *common)
    assert status == 0, record
    assert sorted(record["outputs"]) == ["analysis/perturbation.csv", "analysis/probes.csv"]
    assert len(read_table(out / "analysis" / "perturbation.csv")) == 2 * 2

    for command in ("train-diff", "sample", "metrics", "report"):
        status, record = _run(capsys, command, *common)
        assert status == 0, record

    images = sorted((out / "samples" / "mlora" / "images").glob("gen-*.pgm"))
    assert len(images) == 4
    assert read_netpbm(images[0]).shape == (8, 8, 1)

    metrics = json.loads((out / "metrics" / "mlora.json").read_text())
    assert metrics["generated_count"] == 4
    assert metrics["reference_count"] == 9
    assert metrics["trio"] is None

    reconstruction = read_table(out / "report" / "reconstruction.csv")
    assert [row["parameterization"] for row in reconstruction] == ["mlora", "mlp"]
    assert {row["metric"] for row in reconstruction} == {"psnr"}
    assert [row["parameterization"] for row in read_table(out / "report" / "generation.csv")] == ["mlora"]
    assert [row["runs"] for row in read_table(out / "report" / "probes.csv")] == ["2", "2"]
    assert len(read_table(out / "report" / "structure.csv")) == 4

    first = (out / "report" / "generation.csv").read_bytes()
    status, _ = _run(capsys, "report", *common)
    assert status == 0
    assert (out / "report" / "generation.csv").read_bytes() == first
PIPELINE_COMMANDS = (
    ("gen-data",),
    ("train-base",),
    ("fit",),
    ("analyze", "probes"),
    ("analyze", "perturbation"),
    ("train-diff",),
    ("sample",),
    ("metrics",),
    ("report",),
)


def _run_pipeline(capsys, config, out, *extra):
    for command in PIPELINE_COMMANDS:
        status, record = _run(capsys, *command, "--config", str(config), "--output-dir", str(out), *extra)
        assert status == 0, record


def _records(out):
    return {
        path.relative_to(out).as_posix(): path.read_bytes()
        for path in sorted(out.rglob("*"))
        if path.suffix in {".csv", ".json"}
    }


@pytest.mark.functional()
@pytest.mark.slow()
def test_pipeline_is_reproducible_across_job_counts(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps(PIPELINE_CONFIG))
    _run_pipeline(capsys, config, tmp_path / "a")
    _run_pipeline(capsys, config, tmp_path / "b", "--jobs", "1")

    first, second = _records(tmp_path / "a"), _records(tmp_path / "b")
    assert "report/generation.csv" in first
    assert "manifests/fit.json" in first
    assert sorted(first) == sorted(second)
    for name, content in first.items():
        assert content == second[name], name
