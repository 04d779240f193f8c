"""
Binary container shared by weight datasets, base-model checkpoints and denoiser checkpoints.

    bytes 0-3   magic (ASCII, e.g. WSD1)
    bytes 4-7   header length H, unsigned 32-bit little-endian
    bytes 8-    header: UTF-8 JSON object, keys sorted, compact separators
    then        payload: the blocks listed in header["blocks"], each little-endian float32 in C order

header["blocks"] lists {name, shape, offset, nbytes} relative to the payload start, and header["payload_sha256"]
holds the SHA-256 of the whole payload. Readers verify the hash before returning any data. Big-endian hosts must
byte-swap the payload ("<f4") on read; numpy does this through the explicit dtype.
"""

__all__ = ["ContainerFile", "file_sha256", "read_container", "write_container"]

import hashlib
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from toolkit.exceptions import FormatError, HashMismatchError

_PAYLOAD_DTYPE = np.dtype("<f4")


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as stream:
        for chunk in iter(lambda: stream.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _canonical_json(document: dict) -> bytes:
    return json.dumps(document, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


@dataclass(frozen=True, kw_only=True)
class ContainerFile:
    magic: str
    header: dict
    blocks: dict[str, NDArray[np.float32]]


def write_container(path: Path, magic: str, header: dict, blocks: dict[str, NDArray[np.floating]]) -> str:
    """Write the container and return the payload hash."""
    if len(magic) != 4:
        raise ValueError(f"Container magic must be 4 characters, got '{magic}'")
    layout = []
    parts = []
    offset = 0
    for name, array in blocks.items():
        data = np.ascontiguousarray(array, dtype=_PAYLOAD_DTYPE).tobytes()
        layout.append({"name": name, "shape": list(np.shape(array)), "offset": offset, "nbytes": len(data)})
        parts.append(data)
        offset += len(data)
    payload = b"".join(parts)
    payload_hash = hashlib.sha256(payload).hexdigest()
    encoded = _canonical_json(header | {"blocks": layout, "payload_sha256": payload_hash})
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as stream:
        stream.write(magic.encode("ascii"))
        stream.write(struct.pack("<I", len(encoded)))
        stream.write(encoded)
        stream.write(payload)
    return payload_hash


def read_container(path: Path, magic: str) -> ContainerFile:
    data = path.read_bytes()
    if data[:4] != magic.encode("ascii"):
        raise FormatError(path, 0, f"bad magic {data[:4]!r}, expected {magic!r}")
    if len(data) < 8:
        raise FormatError(path, 4, "truncated header length")
    (length,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + length:
        raise FormatError(path, 8, f"header of {length} bytes is truncated")
    try:
        header = json.loads(data[8 : 8 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(path, 8, f"header is not valid JSON: {e}") from e
    if not isinstance(header, dict) or "blocks" not in header or "payload_sha256" not in header:
        raise FormatError(path, 8, "header lacks the block table or payload hash")

    payload = data[8 + length :]
    actual = hashlib.sha256(payload).hexdigest()
    if actual != header["payload_sha256"]:
        raise HashMismatchError(path, header["payload_sha256"], actual)

    blocks = {}
    for block in header["blocks"]:
        start, nbytes = block["offset"], block["nbytes"]
        if start + nbytes > len(payload) or nbytes != math.prod(block["shape"]) * _PAYLOAD_DTYPE.itemsize:
            raise FormatError(path, 8 + length + start, f"block '{block['name']}' does not fit the payload")
        if nbytes == 0:
            blocks[block["name"]] = np.zeros(block["shape"], dtype=np.float32)
            continue
        array = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE, count=nbytes // 4, offset=start)
        blocks[block["name"]] = array.astype(np.float32).reshape(block["shape"])
    return ContainerFile(magic=magic, header=header, blocks=blocks)
