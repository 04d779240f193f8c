"""
WSD1 weight datasets: one flattened representation per instance plus everything needed to decode it
(architecture manifest, parameterization, base-model hash and mask descriptor).

The container header carries the metadata and the records' ids, labels and final metrics; the payload holds one
`records` block of shape (N, record_length). A companion CSV (`<name>.csv`) lists instance_id, label and metric.
"""

__all__ = ["WSD_MAGIC", "WeightDataset", "WeightRecord", "read_weightdataset", "write_weightdataset"]

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from toolkit.exceptions import FormatError, ShapeMismatchError

from .container import read_container, write_container

LOGGER = logging.getLogger(__name__)

WSD_MAGIC: str = "WSD1"
WSD_VERSION: int = 1


@dataclass(frozen=True, kw_only=True)
class WeightRecord:
    instance_id: str
    label: int | None
    vector: NDArray[np.float32]
    metric: float


@dataclass(kw_only=True)
class WeightDataset:
    arch: dict
    """Architecture manifest (`FieldArch.manifest()`)."""
    arch_hash: str
    parameterization: str
    record_length: int
    metric_name: str
    records: list[WeightRecord] = field(default_factory=list)
    base_hash: str | None = None
    mask: dict | None = None
    settings: dict = field(default_factory=dict)
    """Parameterization settings needed to decode records (rank, LoRA mode, init protocol)."""
    failed: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for record in self.records:
            if record.vector.shape != (self.record_length,):
                raise ShapeMismatchError(f"record[{record.instance_id}]", record.vector.shape, (self.record_length,))

    def __len__(self) -> int:
        return len(self.records)

    @property
    def partial(self) -> bool:
        return bool(self.failed)

    def matrix(self) -> NDArray[np.float32]:
        if not self.records:
            return np.zeros((0, self.record_length), dtype=np.float32)
        return np.stack([r.vector for r in self.records]).astype(np.float32, copy=False)

    def labels(self) -> NDArray[np.int64]:
        return np.asarray([-1 if r.label is None else r.label for r in self.records], dtype=np.int64)

    def ids(self) -> list[str]:
        return [r.instance_id for r in self.records]

    def header(self) -> dict:
        return {
            "magic": WSD_MAGIC,
            "version": WSD_VERSION,
            "endianness": "little",
            "dtype": "float32",
            "arch": self.arch,
            "arch_hash": self.arch_hash,
            "parameterization": self.parameterization,
            "base_hash": self.base_hash,
            "mask": self.mask,
            "settings": self.settings,
            "record_length": self.record_length,
            "count": len(self.records),
            "metric": self.metric_name,
            "partial": self.partial,
            "failed": self.failed,
            "instances": [
                {"id": r.instance_id, "label": r.label, "metric": float(r.metric)} for r in self.records
            ],
        }


def write_weightdataset(path: Path, dataset: WeightDataset) -> str:
    payload_hash = write_container(path, WSD_MAGIC, dataset.header(), {"records": dataset.matrix()})
    with path.with_suffix(".csv").open("w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["instance_id", "label", dataset.metric_name])
        for record in dataset.records:
            writer.writerow([record.instance_id, "" if record.label is None else record.label, f"{record.metric:.6f}"])
    LOGGER.info("Wrote %d records of length %d to %s", len(dataset), dataset.record_length, path)
    return payload_hash


def read_weightdataset(path: Path) -> WeightDataset:
    container = read_container(path, WSD_MAGIC)
    header = container.header
    if header.get("version") != WSD_VERSION:
        raise FormatError(path, 8, f"unsupported WSD version {header.get('version')}")
    matrix = container.blocks["records"]
    if matrix.shape != (header["count"], header["record_length"]):
        raise FormatError(path, 8, f"record block {matrix.shape} disagrees with the header")
    records = [
        WeightRecord(instance_id=meta["id"], label=meta["label"], vector=matrix[i].copy(), metric=meta["metric"])
        for i, meta in enumerate(header["instances"])
    ]
    return WeightDataset(
        arch=header["arch"],
        arch_hash=header["arch_hash"],
        parameterization=header["parameterization"],
        record_length=header["record_length"],
        metric_name=header["metric"],
        records=records,
        base_hash=header["base_hash"],
        mask=header["mask"],
        settings=header["settings"],
        failed=header["failed"],
    )
