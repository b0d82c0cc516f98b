"""Grayscale images: PGM/PNG I/O and area-averaging resampling."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError

LOWRES = 224


@dataclass
class GrayImage:
    """Row-major intensities in [0, 1], shape ``(height, width)``."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2:
            raise ValueError(f"expected a 2D array, got shape {self.pixels.shape}")

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


def _read_token(data, pos):
    n = len(data)
    while pos < n:
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def read_pgm(path):
    data = Path(path).read_bytes()
    magic, pos = _read_token(data, 0)
    if magic not in (b"P5", b"P2"):
        raise ParseError(f"{path}: not a PGM file (magic {magic!r})")
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise ParseError(f"{path}: bad PGM header field {tok!r}") from None
    width, height, maxval = fields
    if magic == b"P5":
        if maxval > 255:
            raise ParseError(f"{path}: only 8-bit PGM is supported")
        pos += 1  # single whitespace before raster
        if len(data) - pos < width * height:
            raise ParseError(f"{path}: truncated raster")
        raw = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    else:
        raw = np.array(data[pos:].split()[: width * height], dtype=float)
    if raw.size != width * height:
        raise ParseError(f"{path}: truncated raster")
    return GrayImage(raw.reshape(height, width).astype(float) / maxval)


def write_pgm(path, pixels):
    """Write an array in [0, 1] as 8-bit binary PGM."""
    pixels = np.asarray(pixels, dtype=float)
    h, w = pixels.shape
    raw = np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(raw.tobytes())


def read_png(path):
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("L", "I", "I;16"):
            arr = np.asarray(im.convert("L"), dtype=float)
        else:
            rgb = np.asarray(im.convert("RGB"), dtype=float)
            arr = rgb @ np.array([0.299, 0.587, 0.114])
    return GrayImage(arr / 255.0)


def read_image(path):
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        return read_pgm(path)
    if path.suffix.lower() == ".png":
        return read_png(path)
    raise ParseError(f"{path}: unsupported image type (use .pgm or .png)")


def _area_matrix(n_out, n_in):
    """Rows average the input cells each output cell covers, weighted by overlap."""
    m = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        j0, j1 = int(np.floor(lo)), int(np.ceil(hi))
        for j in range(j0, min(j1, n_in)):
            m[i, j] = min(hi, j + 1) - max(lo, j)
        m[i] /= m[i].sum()
    return m


def resample_area(img, width=LOWRES, height=LOWRES):
    if img.width == width and img.height == height:
        return GrayImage(img.pixels.copy())
    ay = _area_matrix(height, img.height)
    ax = _area_matrix(width, img.width)
    return GrayImage(ay @ img.pixels @ ax.T)
