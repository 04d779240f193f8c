"""
Run configuration and the per-command context.

A run reads one configuration document (JSON, or TOML by suffix) with one object per section, applies `--set
section.key=value` overrides and registers every section in the configuration registry. Environment variables
(`WSF_<KEY>` for core, `WSF_<SECTION>_<KEY>` otherwise) take precedence over both.
"""

__all__ = ["RunContext", "RunLayout", "apply_override", "build_document", "load_run_config", "write_resolved_config"]

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from framework.configuration import CoreConfiguration
from registry import ConfigurationRegistry
from registry.configuration_registry import CONFIGURATION_ID
from toolkit.configuration.sources import load_document
from toolkit.exceptions import ConfigurationError
from weightspace.basemodel.configuration import BaseTrainingConfiguration
from weightspace.datastore import (
    build_manifest,
    file_sha256,
    manifest_path,
    read_manifest,
    require_artifact,
    verify_outputs,
    write_manifest,
)
from weightspace.datastore.configuration import DataConfiguration
from weightspace.diffusion.configuration import DiffusionConfiguration
from weightspace.fitting.configuration import FittingConfiguration
from weightspace.genmetrics.configuration import MetricsConfiguration
from weightspace.nfcore.configuration import ArchConfiguration
from weightspace.wsanalysis.configuration import AnalysisConfiguration

LOGGER = logging.getLogger(__name__)

SECTIONS: dict[CONFIGURATION_ID, type] = {
    "analysis": AnalysisConfiguration,
    "arch": ArchConfiguration,
    "base": BaseTrainingConfiguration,
    "core": CoreConfiguration,
    "data": DataConfiguration,
    "diffusion": DiffusionConfiguration,
    "fitting": FittingConfiguration,
    "metrics": MetricsConfiguration,
}

RESOLVED_CONFIG_FILE = "resolved_config.json"


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_override(document: dict, assignment: str) -> None:
    """Apply one `section.key=value` assignment in place; the value is parsed as JSON when it is valid JSON."""
    path, sep, raw = assignment.partition("=")
    keys = [k for k in path.strip().split(".") if k]
    if not sep or len(keys) < 2:
        raise ConfigurationError(f"Override '{assignment}' must look like section.key=value")
    if keys[0] not in SECTIONS:
        raise ConfigurationError(f"Unknown configuration section '{keys[0]}' in override '{assignment}'")
    target = document
    for key in keys[:-1]:
        target = target.setdefault(key, {})
        if not isinstance(target, dict):
            raise ConfigurationError(f"Override '{assignment}' descends into a non-object value at '{key}'")
    target[keys[-1]] = _parse_value(raw.strip())


def build_document(config_path: Path | None, overrides: list[str]) -> dict:
    document = load_document(config_path) if config_path is not None else {}
    unknown = set(document) - set(SECTIONS)
    if unknown:
        raise ConfigurationError(f"Unknown configuration sections {sorted(unknown)}; known: {sorted(SECTIONS)}")
    for assignment in overrides:
        apply_override(document, assignment)
    return document


def load_run_config(config_path: Path | None = None, overrides: list[str] | None = None) -> ConfigurationRegistry:
    """Validate every section and register it; returns the registry holding the run's configuration."""
    ConfigurationRegistry.use_document(build_document(config_path, overrides or []))
    registry = ConfigurationRegistry()
    for section, cls in SECTIONS.items():
        registry.lookup(section, cls)
    return registry


def write_resolved_config(registry: ConfigurationRegistry, output_dir: Path) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / RESOLVED_CONFIG_FILE
    path.write_text(json.dumps(registry.resolved(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


@dataclass(frozen=True)
class RunLayout:
    """Where every command reads and writes its artifacts below the output directory."""

    root: Path

    @property
    def data_dir(self) -> Path:
        return self.root / "data"

    @property
    def base_checkpoint(self) -> Path:
        return self.root / "base" / "base.wsc"

    def weights(self, parameterization: str) -> Path:
        return self.root / "weights" / f"{parameterization}.wsd"

    def fit_reports(self, parameterization: str) -> Path:
        return self.root / "weights" / f"{parameterization}.fits.json"

    @property
    def analysis_dir(self) -> Path:
        return self.root / "analysis"

    def denoiser(self, parameterization: str) -> Path:
        return self.root / "diffusion" / f"{parameterization}.wsm"

    def samples_dir(self, parameterization: str) -> Path:
        return self.root / "samples" / parameterization

    def metrics(self, parameterization: str) -> Path:
        return self.root / "metrics" / f"{parameterization}.json"

    @property
    def report_dir(self) -> Path:
        return self.root / "report"

    def log_file(self, command: str) -> Path:
        return self.root / "logs" / f"{command}.log"


@dataclass
class RunContext:
    """What a command needs while it runs: configuration, layout, and the artifacts it read and wrote."""

    command: str
    registry: ConfigurationRegistry
    inputs: list[Path] = field(default_factory=list)
    outputs: list[Path] = field(default_factory=list)
    accumulate: bool = False
    """Keep the unchanged outputs of the previous run of this command in its manifest."""

    @property
    def core(self) -> CoreConfiguration:
        return self.registry.lookup("core", CoreConfiguration)

    @property
    def seed(self) -> int:
        return self.core.seed

    @property
    def jobs(self) -> int:
        return self.core.workers

    @property
    def layout(self) -> RunLayout:
        return RunLayout(self.core.output_dir)

    def section(self, configuration_id: CONFIGURATION_ID) -> Any:
        return self.registry.lookup(configuration_id, SECTIONS[configuration_id])

    def consume(self, path: Path, producer: str) -> Path:
        """Check that an upstream artifact exists and matches its producer's manifest, and record it as an input."""
        require_artifact(path, producer)
        verify_outputs(read_manifest(self.layout.root, producer), self.layout.root, [path])
        self.inputs.append(path)
        return path

    def consume_all(self, producer: str) -> list[Path]:
        """Verify and record every output of an upstream command."""
        root = self.layout.root
        manifest = read_manifest(root, producer)
        verify_outputs(manifest, root)
        paths = [root / entry.path for entry in manifest.outputs]
        self.inputs.extend(paths)
        return paths

    def consume_under(self, directory: Path, producer: str) -> list[Path]:
        """Verify and record the outputs of an upstream command that lie below `directory`."""
        root = self.layout.root
        manifest = read_manifest(root, producer)
        paths = [root / entry.path for entry in manifest.outputs if (root / entry.path).is_relative_to(directory)]
        verify_outputs(manifest, root, paths)
        self.inputs.extend(paths)
        return paths

    def produce(self, *paths: Path) -> None:
        self.outputs.extend(paths)

    def _carry_previous_outputs(self) -> None:
        root = self.layout.root
        if not manifest_path(root, self.command).exists():
            return
        fresh = {p.resolve() for p in self.outputs}
        for entry in read_manifest(root, self.command).outputs:
            path = root / entry.path
            if path.resolve() not in fresh and path.exists() and file_sha256(path) == entry.sha256:
                self.outputs.append(path)

    def finish(self, **summary: Any) -> dict:
        """Write the command's manifest and return its summary record."""
        root = self.layout.root
        if self.accumulate:
            self._carry_previous_outputs()
        manifest = build_manifest(
            self.command,
            root,
            seed=self.seed,
            config=self.registry.resolved(),
            inputs=list(dict.fromkeys(self.inputs)),
            outputs=list(dict.fromkeys(self.outputs)),
        )
        path = write_manifest(manifest, root)
        LOGGER.info("Wrote manifest %s with %d outputs", path, len(manifest.outputs))
        return {
            "status": "ok",
            "command": self.command,
            "outputs": [entry.path for entry in manifest.outputs],
            **summary,
        }
