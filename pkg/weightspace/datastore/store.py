"""
On-disk toy datasets: `<data_dir>/instances.json` indexes every instance; images are stored next to it as 8-bit
PGM/PPM files, SDF instances by their analytic descriptor.
"""

__all__ = ["INSTANCES_FILE", "read_instances", "write_instances"]

import json
from collections.abc import Sequence
from pathlib import Path

from toolkit.exceptions import FormatError

from .netpbm import read_netpbm, write_netpbm
from .toy import ImageInstance, Instance, Modality, SdfInstance

INSTANCES_FILE = "instances.json"


def write_instances(data_dir: Path, instances: Sequence[Instance]) -> list[Path]:
    """Write the index and image files; returns every path written."""
    data_dir.mkdir(parents=True, exist_ok=True)
    written = []
    entries = []
    for instance in instances:
        entry: dict = {"id": instance.id, "label": instance.label, "modality": instance.modality.value}
        if isinstance(instance, ImageInstance):
            suffix = ".pgm" if instance.pixels.shape[-1] == 1 else ".ppm"
            image_path = write_netpbm(data_dir / "images" / f"{instance.id}{suffix}", instance.pixels)
            entry["path"] = image_path.relative_to(data_dir).as_posix()
            written.append(image_path)
        else:
            entry["shape"] = instance.descriptor()
        entries.append(entry)
    index = data_dir / INSTANCES_FILE
    index.write_text(json.dumps({"instances": entries}, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return [index, *written]


def read_instances(data_dir: Path) -> list[Instance]:
    index = data_dir / INSTANCES_FILE
    document = json.loads(index.read_text(encoding="utf-8"))
    instances: list[Instance] = []
    for position, entry in enumerate(document.get("instances", [])):
        match entry.get("modality"):
            case Modality.IMAGE:
                pixels = read_netpbm(data_dir / entry["path"])
                instances.append(ImageInstance(id=entry["id"], label=entry["label"], pixels=pixels))
            case Modality.SDF:
                instances.append(SdfInstance.from_descriptor(entry["id"], entry["label"], entry["shape"]))
            case other:
                raise FormatError(index, 0, f"unknown modality {other!r} in instance entry {position}")
    return instances
