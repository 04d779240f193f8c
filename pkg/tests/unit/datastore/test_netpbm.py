import numpy as np
import pytest

from toolkit.exceptions import FormatError
from weightspace.datastore import read_netpbm, write_netpbm


@pytest.mark.unit()
@pytest.mark.parametrize("channels", [1, 3])
def test_gradient_round_trip(tmp_path, channels):
    ramp = np.linspace(0.0, 1.0, 64 * 64 * channels, dtype=np.float32).reshape(64, 64, channels)
    restored = read_netpbm(write_netpbm(tmp_path / "ramp.pnm", ramp))
    assert restored.shape == ramp.shape
    assert np.abs(restored - ramp).max() <= 1 / 255


@pytest.mark.unit()
def test_ascii_with_comments(tmp_path):
    path = tmp_path / "tiny.pgm"
    path.write_bytes(b"P2\n# made by hand\n2 2 # size\n# max\n255\n0 255\n128\n64\n")
    image = read_netpbm(path)
    assert image[..., 0].tolist() == pytest.approx([[0.0, 1.0], [128 / 255, 64 / 255]])


@pytest.mark.unit()
def test_ascii_color(tmp_path):
    path = tmp_path / "tiny.ppm"
    path.write_bytes(b"P3 1 1 255 255 0 51\n")
    assert read_netpbm(path)[0, 0].tolist() == pytest.approx([1.0, 0.0, 0.2])


@pytest.mark.unit()
def test_truncated_binary_raster(tmp_path):
    path = write_netpbm(tmp_path / "image.ppm", np.ones((4, 4, 3)))
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(FormatError) as error:
        read_netpbm(path)
    assert "truncated" in str(error.value)


@pytest.mark.unit()
@pytest.mark.parametrize(
    ("content", "offset"),
    [(b"P7\n1 1\n255\n", 0), (b"P5\nx 1\n255\n\x00", 3), (b"P5\n1 1\n65535\n\x00\x00", 7)],
)
def test_malformed_headers_report_offsets(tmp_path, content, offset):
    path = tmp_path / "bad.pgm"
    path.write_bytes(content)
    with pytest.raises(FormatError) as error:
        read_netpbm(path)
    assert error.value.offset == offset
