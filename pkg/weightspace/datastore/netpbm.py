"""
8-bit PGM/PPM images. Reads P2/P3 (ASCII) and P5/P6 (binary) with `#` comments in the header; writes binary P5/P6.
Images are (H, W, C) float arrays in [0, 1], C = 1 for PGM and 3 for PPM.
"""

__all__ = ["read_netpbm", "write_netpbm"]

from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from toolkit.exceptions import FormatError, ShapeMismatchError

_CHANNELS = {b"P2": 1, b"P5": 1, b"P3": 3, b"P6": 3}
_WHITESPACE = b" \t\r\n\x0b\x0c"


class _HeaderReader:
    def __init__(self, path: Path, data: bytes) -> None:
        self.path = path
        self.data = data
        self.offset = 0

    def _skip_whitespace_and_comments(self) -> None:
        while self.offset < len(self.data):
            byte = self.data[self.offset : self.offset + 1]
            if byte == b"#":
                end = self.data.find(b"\n", self.offset)
                self.offset = len(self.data) if end < 0 else end + 1
            elif byte in _WHITESPACE:
                self.offset += 1
            else:
                return

    def token(self) -> bytes:
        self._skip_whitespace_and_comments()
        start = self.offset
        while self.offset < len(self.data) and self.data[self.offset : self.offset + 1] not in _WHITESPACE + b"#":
            self.offset += 1
        if start == self.offset:
            raise FormatError(self.path, start, "unexpected end of header")
        return self.data[start : self.offset]

    def integer(self, name: str) -> int:
        self._skip_whitespace_and_comments()
        start = self.offset
        raw = self.token()
        try:
            value = int(raw)
        except ValueError as e:
            raise FormatError(self.path, start, f"{name} is not an integer: {raw!r}") from e
        if value < 1:
            raise FormatError(self.path, start, f"{name} must be positive, got {value}")
        return value


def read_netpbm(path: Path) -> NDArray[np.float32]:
    data = path.read_bytes()
    header = _HeaderReader(path, data)
    magic = data[:2]
    if magic not in _CHANNELS:
        raise FormatError(path, 0, f"unsupported magic {magic!r}; expected P2, P3, P5 or P6")
    header.offset = 2
    channels = _CHANNELS[magic]
    width = header.integer("width")
    height = header.integer("height")
    header._skip_whitespace_and_comments()
    maxval_offset = header.offset
    maxval = header.integer("maxval")
    if maxval > 255:
        raise FormatError(path, maxval_offset, f"only 8-bit images are supported, maxval is {maxval}")
    expected = width * height * channels

    if magic in (b"P5", b"P6"):
        if header.offset >= len(data):
            raise FormatError(path, header.offset, "missing raster")
        start = header.offset + 1
        raster = np.frombuffer(data, dtype=np.uint8, count=min(expected, max(len(data) - start, 0)), offset=start)
        if raster.size != expected:
            raise FormatError(path, len(data), f"truncated raster: {raster.size} of {expected} samples")
    else:
        samples = []
        for _ in range(expected):
            try:
                samples.append(int(header.token()))
            except FormatError as e:
                raise FormatError(path, len(data), f"truncated raster: {len(samples)} of {expected} samples") from e
            except ValueError as e:
                raise FormatError(path, header.offset, "non-integer sample") from e
        raster = np.asarray(samples, dtype=np.int64)
        if raster.size and raster.max() > maxval:
            raise FormatError(path, header.offset, f"sample above maxval {maxval}")
    return (raster.reshape(height, width, channels).astype(np.float32) / maxval).astype(np.float32)


def write_netpbm(path: Path, image: NDArray[np.floating], comment: str | None = None) -> Path:
    """Binary P5 for one channel, P6 for three. Values are clipped to [0, 1] and rounded to 8 bits."""
    array = np.asarray(image, dtype=np.float64)
    if array.ndim == 2:
        array = array[..., None]
    if array.ndim != 3 or array.shape[-1] not in (1, 3):
        raise ShapeMismatchError("write_netpbm", array.shape, (-1, -1, 3))
    height, width, channels = array.shape
    magic = b"P5" if channels == 1 else b"P6"
    header = magic + b"\n"
    if comment:
        header += b"# " + comment.encode("ascii", "replace") + b"\n"
    header += f"{width} {height}\n255\n".encode("ascii")
    raster = np.rint(np.clip(array, 0.0, 1.0) * 255.0).astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + raster.tobytes())
    return path
