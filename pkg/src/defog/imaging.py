"""Raster types, PNG/PPM file I/O and scalar-field extraction."""
from __future__ import annotations

import enum
import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from defog.errors import CorruptData, InvalidParams, UnsupportedFormat

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ScalarMode(str, enum.Enum):
    BRIGHTNESS = "brightness"
    R = "r"
    G = "g"
    B = "b"

    @classmethod
    def parse(cls, value: "str | ScalarMode") -> "ScalarMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParams(f"unknown scalar mode {value!r}") from None


@dataclass(frozen=True, eq=False)
class RgbImage:
    """8-bit RGB raster stored as a read-only ``(height, width, 3)`` uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise InvalidParams(f"expected (H, W, 3) pixel array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidParams("image must be at least 1x1")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise InvalidParams(f"pixel values must be integers, got {arr.dtype}")
            if arr.min() < 0 or arr.max() > 255:
                raise InvalidParams("pixel values must lie in [0, 255]")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_pixels(cls, width: int, height: int, pixels) -> "RgbImage":
        """Build from a row-major sequence of ``(r, g, b)`` triples."""
        arr = np.asarray(list(pixels), dtype=np.int64)
        if arr.shape != (width * height, 3):
            raise InvalidParams(f"expected {width * height} RGB triples, got array of shape {arr.shape}")
        return cls(arr.reshape(height, width, 3))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Per-pixel float64 plane, shape ``(height, width)``; all values finite."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.size == 0:
            raise InvalidParams(f"expected non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParams("scalar field contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, ScalarField):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


def to_scalar(img: RgbImage, mode: "ScalarMode | str" = ScalarMode.BRIGHTNESS) -> ScalarField:
    mode = ScalarMode.parse(mode)
    px = img.pixels.astype(np.float64)
    if mode is ScalarMode.BRIGHTNESS:
        # unweighted mean keeps the channels symmetric
        return ScalarField((px[..., 0] + px[..., 1] + px[..., 2]) / 3.0)
    return ScalarField(px[..., "rgb".index(mode.value)])


# --------------------------------------------------------------------------- I/O


def load_image(path: "str | os.PathLike[str]") -> RgbImage:
    """Decode an 8-bit PNG or binary PPM (P6, maxval 255) file.

    Raises FileNotFoundError, UnsupportedFormat or CorruptData.
    """
    path = Path(path)
    data = path.read_bytes()
    if data.startswith(PNG_SIGNATURE):
        return _decode_png(path, data)
    if data.startswith(b"P6"):
        return _decode_ppm(data)
    raise UnsupportedFormat(f"{path}: not a PNG or binary PPM file")


def _decode_png(path: Path, data: bytes) -> RgbImage:
    # Pillow silently narrows 16-bit RGB to 8 bits, so check IHDR ourselves.
    if len(data) < 33 or data[12:16] != b"IHDR":
        raise CorruptData(f"{path}: truncated or malformed PNG header")
    bit_depth = data[24]
    if bit_depth == 16:
        raise UnsupportedFormat(f"{path}: 16-bit PNG is not supported")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("RGBA", "LA", "P", "PA", "1"):
                im = im.convert("RGBA").convert("RGB")
            elif im.mode in ("L", "RGB"):
                im = im.convert("RGB")
            else:
                raise UnsupportedFormat(f"{path}: unsupported PNG mode {im.mode}")
            arr = np.asarray(im, dtype=np.uint8)
    except UnsupportedFormat:
        raise
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptData(f"{path}: {exc}") from exc
    return RgbImage(arr)


def _ppm_header(data: bytes) -> tuple[list[int], int]:
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise CorruptData("truncated PPM header")
        ch = data[pos:pos + 1]
        if ch == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise CorruptData("truncated PPM header")
            pos = end + 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            token = data[start:pos]
            if not token.isdigit():
                raise CorruptData(f"bad PPM header token {token!r}")
            fields.append(int(token))
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise CorruptData("missing whitespace after PPM maxval")
    return fields, pos + 1


def _decode_ppm(data: bytes) -> RgbImage:
    if len(data) < 3 or not data[2:3].isspace():
        raise CorruptData("bad PPM magic")
    (width, height, maxval), offset = _ppm_header(data)
    if maxval > 255:
        raise UnsupportedFormat("16-bit PPM (maxval > 255) is not supported")
    if maxval != 255:
        raise UnsupportedFormat(f"PPM maxval {maxval} is not supported, expected 255")
    if width < 1 or height < 1:
        raise CorruptData("PPM dimensions must be positive")
    n = width * height * 3
    raster = data[offset:offset + n]
    if len(raster) != n:
        raise CorruptData(f"PPM raster truncated: expected {n} bytes, got {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return RgbImage(arr)


def save_image(img: RgbImage, path: "str | os.PathLike[str]") -> None:
    """Write ``img`` as PPM if the suffix is ``.ppm``, otherwise as PNG."""
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        header = b"P6\n%d %d\n255\n" % (img.width, img.height)
        path.write_bytes(header + img.pixels.tobytes())
        return
    Image.fromarray(np.ascontiguousarray(img.pixels), mode="RGB").save(path, format="PNG")


def pixel_checksum(img: RgbImage) -> str:
    h = hashlib.sha256()
    h.update(struct.pack("<II", img.width, img.height))
    h.update(img.pixels.tobytes())
    return h.hexdigest()
