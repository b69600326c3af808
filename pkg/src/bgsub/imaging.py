"""Frame and mask rasters plus binary PPM/PGM I/O.

All rasters are row-major with a top-left origin, stored as read-only numpy
arrays: ``Frame`` is (height, width, 3) uint8, ``GrayFrame`` is
(height, width) uint8 and ``ClassMask`` is (height, width) uint8 holding
``PixelClass`` codes.
"""

from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np


class PixelClass(enum.IntEnum):
    BACKGROUND = 0
    FOREGROUND = 1
    SHADOW = 2
    HIGHLIGHT = 3


# PGM gray level for each class; must stay a bijection
MASK_ENCODING = {
    PixelClass.BACKGROUND: 0,
    PixelClass.SHADOW: 85,
    PixelClass.HIGHLIGHT: 170,
    PixelClass.FOREGROUND: 255,
}
MASK_DECODING = {v: k for k, v in MASK_ENCODING.items()}

_ENCODE_LUT = np.zeros(len(PixelClass), dtype=np.uint8)
for _cls, _level in MASK_ENCODING.items():
    _ENCODE_LUT[_cls] = _level


class ImageFormatError(ValueError):
    """Raised for malformed or unsupported PPM/PGM content."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    # an already read-only contiguous uint8 array cannot be mutated through us
    if arr.dtype == np.uint8 and arr.flags.c_contiguous and not arr.flags.writeable:
        return arr
    arr = np.array(arr, dtype=np.uint8, order="C", copy=True)
    arr.flags.writeable = False
    return arr


def _check_size(height: int, width: int) -> None:
    if width < 1 or height < 1:
        raise ValueError(f"raster must be at least 1x1, got {width}x{height}")


@dataclass(frozen=True, eq=False)
class Frame:
    """RGB 8-bit frame, pixels shaped (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"Frame needs shape (h, w, 3), got {px.shape}")
        _check_size(px.shape[0], px.shape[1])
        _check_range(px)
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GrayFrame:
    """Grayscale 8-bit frame, pixels shaped (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"GrayFrame needs shape (h, w), got {px.shape}")
        _check_size(*px.shape)
        _check_range(px)
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, GrayFrame):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ClassMask:
    """Per-pixel PixelClass labels, shaped (height, width)."""

    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise ValueError(f"ClassMask needs shape (h, w), got {lab.shape}")
        _check_size(*lab.shape)
        if lab.size and (lab.min() < 0 or lab.max() >= len(PixelClass)):
            raise ValueError("ClassMask labels must be PixelClass codes 0-3")
        object.__setattr__(self, "labels", _frozen(lab))

    @classmethod
    def filled(cls, height: int, width: int, label: PixelClass) -> "ClassMask":
        return cls(np.full((height, width), int(label), dtype=np.uint8))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def count(self, label: PixelClass) -> int:
        return int(np.count_nonzero(self.labels == label))

    def foreground(self) -> np.ndarray:
        """Boolean foreground raster; Shadow and Highlight count as background."""
        return self.labels == PixelClass.FOREGROUND

    def __eq__(self, other):
        if not isinstance(other, ClassMask):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    __hash__ = None


def _check_range(px: np.ndarray) -> None:
    if px.dtype == np.uint8:
        return
    if not np.issubdtype(px.dtype, np.integer):
        raise ValueError(f"pixel data must be integer, got {px.dtype}")
    if px.size and (px.min() < 0 or px.max() > 255):
        raise ValueError("pixel values must lie in 0-255")


def round_half_away(x):
    """Round to nearest integer, ties away from zero (np.round rounds ties to even)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def to_grayscale(frame: Frame) -> GrayFrame:
    # Rec. 601 luma
    px = frame.pixels.astype(np.float64)
    luma = 0.299 * px[..., 0] + 0.587 * px[..., 1] + 0.114 * px[..., 2]
    return GrayFrame(np.clip(round_half_away(luma), 0, 255).astype(np.uint8))


# --- file I/O -------------------------------------------------------------

PathLike = Union[str, os.PathLike]

# magic, then width, height, maxval separated by whitespace and optional comments
_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([^\s#]+)")


def _parse_header(data: bytes, magic: bytes) -> tuple[int, int, int]:
    pos = 0
    tokens = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError("malformed header: truncated")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != magic:
        raise ImageFormatError(
            f"malformed header: expected {magic.decode()} magic, got {tokens[0][:8]!r}"
        )
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageFormatError("malformed header: non-integer field") from None
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or data[pos : pos + 1] not in b" \t\r\n":
        raise ImageFormatError("malformed header: missing separator before pixel data")
    if width < 1 or height < 1:
        raise ImageFormatError(f"malformed header: bad size {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval} (only 255)")
    return width, height, pos + 1


def _read_raster(path: PathLike, magic: bytes, channels: int) -> np.ndarray:
    data = Path(path).read_bytes()
    width, height, offset = _parse_header(data, magic)
    need = width * height * channels
    body = data[offset : offset + need]
    if len(body) < need:
        raise ImageFormatError(f"truncated pixel data: {len(body)} of {need} bytes")
    arr = np.frombuffer(body, dtype=np.uint8)
    shape = (height, width, channels) if channels == 3 else (height, width)
    return arr.reshape(shape)


def _write_raster(path: PathLike, magic: bytes, arr: np.ndarray) -> None:
    h, w = arr.shape[:2]
    header = b"%s\n%d %d\n255\n" % (magic, w, h)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr, dtype=np.uint8).tobytes())


def load_ppm(path: PathLike) -> Frame:
    return Frame(_read_raster(path, b"P6", 3))


def save_ppm(frame: Frame, path: PathLike) -> None:
    _write_raster(path, b"P6", frame.pixels)


def load_pgm(path: PathLike) -> GrayFrame:
    return GrayFrame(_read_raster(path, b"P5", 1))


def encode_mask(mask: ClassMask) -> GrayFrame:
    return GrayFrame(_ENCODE_LUT[mask.labels])


def decode_mask(gray: GrayFrame) -> ClassMask:
    levels = gray.pixels
    lut = np.full(256, 255, dtype=np.uint8)
    for level, cls in MASK_DECODING.items():
        lut[level] = cls
    labels = lut[levels]
    if (labels == 255).any():
        bad = sorted(set(np.unique(levels[labels == 255]).tolist()))
        raise ImageFormatError(f"gray levels {bad[:5]} are not mask codes")
    return ClassMask(labels)


def save_pgm(image: Union[GrayFrame, ClassMask], path: PathLike) -> None:
    if isinstance(image, ClassMask):
        image = encode_mask(image)
    _write_raster(path, b"P5", image.pixels)


def load_mask(path: PathLike) -> ClassMask:
    return decode_mask(load_pgm(path))


# --- sequences ------------------------------------------------------------

def frame_filename(prefix: str, index: int, ext: str) -> str:
    """Zero-padded, 1-based sequence file name, e.g. frame_000001.ppm."""
    return f"{prefix}_{index + 1:06d}.{ext}"


def list_sequence(directory: PathLike, ext: str) -> list[Path]:
    paths = sorted(p for p in Path(directory).iterdir() if p.suffix == f".{ext}")
    if not paths:
        raise FileNotFoundError(f"no .{ext} files in {directory}")
    return paths


def load_sequence(directory: PathLike) -> list[Frame]:
    return [load_ppm(p) for p in list_sequence(directory, "ppm")]


def load_mask_sequence(directory: PathLike) -> list[ClassMask]:
    return [load_mask(p) for p in list_sequence(directory, "pgm")]


def save_sequence(frames, directory: PathLike, prefix: str = "frame") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for i, f in enumerate(frames):
        p = directory / frame_filename(prefix, i, "ppm")
        save_ppm(f, p)
        out.append(p)
    return out


def save_mask_sequence(masks, directory: PathLike, prefix: str = "mask",
                       start_index: int = 0) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for i, m in enumerate(masks):
        p = directory / frame_filename(prefix, start_index + i, "pgm")
        save_pgm(m, p)
        out.append(p)
    return out
