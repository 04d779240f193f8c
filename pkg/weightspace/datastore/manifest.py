"""
Experiment manifests. Every command writes `<output_dir>/manifests/<command>.json` listing the resolved configuration,
the seed, and the SHA-256 of every input and output artifact (paths relative to the output directory). Downstream
commands verify the hashes of the artifacts they consume before reading them.
"""

__all__ = [
    "ArtifactEntry",
    "ExperimentManifest",
    "build_manifest",
    "manifest_path",
    "read_manifest",
    "require_artifact",
    "verify_outputs",
    "write_manifest",
]

import json
import logging
from pathlib import Path

from pydantic import BaseModel, ConfigDict

from framework import __version__
from toolkit.exceptions import ArtifactError, HashMismatchError

from .container import file_sha256

LOGGER = logging.getLogger(__name__)


class ArtifactEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    path: str
    sha256: str


class ExperimentManifest(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: str
    tool_version: str
    seed: int
    config: dict
    inputs: list[ArtifactEntry]
    outputs: list[ArtifactEntry]


def _entry(path: Path, root: Path) -> ArtifactEntry:
    return ArtifactEntry(path=path.resolve().relative_to(root.resolve()).as_posix(), sha256=file_sha256(path))


def manifest_path(output_dir: Path, command: str) -> Path:
    return output_dir / "manifests" / f"{command}.json"


def build_manifest(
    command: str,
    output_dir: Path,
    *,
    seed: int,
    config: dict,
    inputs: list[Path],
    outputs: list[Path],
) -> ExperimentManifest:
    return ExperimentManifest(
        command=command,
        tool_version=__version__,
        seed=seed,
        config=config,
        inputs=[_entry(p, output_dir) for p in sorted(inputs)],
        outputs=[_entry(p, output_dir) for p in sorted(outputs)],
    )


def write_manifest(manifest: ExperimentManifest, output_dir: Path) -> Path:
    path = manifest_path(output_dir, manifest.command)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_manifest(output_dir: Path, command: str) -> ExperimentManifest:
    path = manifest_path(output_dir, command)
    if not path.exists():
        raise ArtifactError(path, command)
    return ExperimentManifest.model_validate_json(path.read_text(encoding="utf-8"))


def verify_outputs(manifest: ExperimentManifest, output_dir: Path, paths: list[Path] | None = None) -> None:
    """Recompute the hashes of a manifest's outputs (or the listed subset of them)."""
    wanted = None if paths is None else {_relative(p, output_dir) for p in paths}
    if wanted is not None:
        unlisted = sorted(wanted - {entry.path for entry in manifest.outputs})
        if unlisted:
            raise ArtifactError(output_dir / unlisted[0], manifest.command)
    for entry in manifest.outputs:
        if wanted is not None and entry.path not in wanted:
            continue
        path = output_dir / entry.path
        if not path.exists():
            raise ArtifactError(path, manifest.command)
        actual = file_sha256(path)
        if actual != entry.sha256:
            raise HashMismatchError(path, entry.sha256, actual)
    LOGGER.debug("Verified outputs of '%s'", manifest.command)


def _relative(path: Path, root: Path) -> str:
    return path.resolve().relative_to(root.resolve()).as_posix()


def require_artifact(path: Path, producer: str) -> Path:
    if not path.exists():
        raise ArtifactError(path, producer)
    return path
