"""Loading, geometry normalization and gray-level quantization of image chips.

Two on-disk formats are understood: portable graymaps (``P5`` binary and
``P2`` ASCII) and MSTAR Phoenix files (ASCII key=value header followed by
big-endian float32 magnitude and phase blocks).
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PHOENIX_MAGIC = b"[PhoenixHeaderVer"
PHOENIX_END = b"[EndofPhoenixHeader]"


class ImageFormatError(ValueError):
    """Raised for malformed image payloads; ``offset`` is the byte position."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ManifestError(ValueError):
    pass


def _frozen(arr, dtype):
    arr = np.array(arr, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale chip stored as a ``(height, width)`` uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        if px.size and (px.min() < 0 or px.max() > 255):
            raise ValueError("pixels must lie in [0, 255]")
        h, w = px.shape
        if w < 2 or h < 2:
            raise ValueError(f"image must be at least 2x2, got {w}x{h}")
        object.__setattr__(self, "pixels", _frozen(px, np.uint8))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


@dataclass(frozen=True)
class QuantizedImage:
    pixels: np.ndarray
    levels: int = field(default=32)

    def __post_init__(self):
        if not 2 <= self.levels <= 256:
            raise ValueError(f"levels must be in [2, 256], got {self.levels}")
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        if px.size and (px.min() < 0 or px.max() >= self.levels):
            raise ValueError("quantized pixels must lie in [0, levels - 1]")
        object.__setattr__(self, "pixels", _frozen(px, np.int64))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


@dataclass(frozen=True)
class ClassLabel:
    name: str
    index: int


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple  # of (Path, ClassLabel)
    classes: tuple  # of ClassLabel

    @property
    def paths(self):
        return [p for p, _ in self.entries]

    @property
    def labels(self):
        return np.array([c.index for _, c in self.entries], dtype=np.int64)

    @property
    def class_names(self):
        return [c.name for c in self.classes]

    def counts(self):
        return np.bincount(self.labels, minlength=len(self.classes))


# --------------------------------------------------------------------------
# portable graymap
# --------------------------------------------------------------------------

_WS = b" \t\r\n\x0b\x0c"


def _pgm_tokens(data, pos, count):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos] in _WS or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            raise ImageFormatError("truncated graymap header", pos)
        start = pos
        while pos < n and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        tok = data[start:pos]
        if not tok.isdigit():
            raise ImageFormatError(f"malformed header token {tok!r}", start)
        tokens.append((int(tok), start))
    return tokens, pos


def load_pgm(data: bytes) -> GrayImage:
    """Decode a P5 or P2 graymap.

    Samples with ``maxval > 255`` are rescaled with ``round(p * 255 / maxval)``
    (halves rounded up).
    """
    data = bytes(data)
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise ImageFormatError(f"bad graymap magic {magic!r}", 0)
    tokens, pos = _pgm_tokens(data, 2, 3)
    (w, w_at), (h, h_at), (maxval, m_at) = tokens
    if w == 0:
        raise ImageFormatError("zero width", w_at)
    if h == 0:
        raise ImageFormatError("zero height", h_at)
    if not 0 < maxval <= 65535:
        raise ImageFormatError(f"maxval {maxval} outside [1, 65535]", m_at)
    npix = w * h

    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(data) or data[pos] not in _WS:
            raise ImageFormatError("missing whitespace after maxval", pos)
        pos += 1
        nbytes = 2 if maxval > 255 else 1
        need = npix * nbytes
        if len(data) - pos < need:
            raise ImageFormatError(
                f"truncated raster: need {need} bytes, have {len(data) - pos}", len(data))
        dtype = ">u2" if nbytes == 2 else "u1"
        raw = np.frombuffer(data, dtype=dtype, count=npix, offset=pos).astype(np.int64)
    else:
        body = data[pos:]
        parts = body.split()
        if len(parts) < npix:
            raise ImageFormatError(
                f"truncated raster: need {npix} samples, have {len(parts)}", len(data))
        try:
            raw = np.array([int(t) for t in parts[:npix]], dtype=np.int64)
        except ValueError as exc:
            raise ImageFormatError(f"non-integer sample: {exc}", pos) from None

    if raw.size and raw.max() > maxval:
        raise ImageFormatError(f"sample exceeds maxval {maxval}", pos)
    if maxval != 255:
        # round-half-up in exact integer arithmetic
        raw = (2 * raw * 255 + maxval) // (2 * maxval)
    try:
        return GrayImage(raw.reshape(h, w))
    except ValueError as exc:
        raise ImageFormatError(str(exc), w_at) from None


def dump_pgm(img: GrayImage) -> bytes:
    """Encode as a binary P5 graymap with maxval 255."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.astype(np.uint8).tobytes()


# --------------------------------------------------------------------------
# MSTAR Phoenix
# --------------------------------------------------------------------------

_KV = re.compile(rb"^\s*([A-Za-z][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")


def parse_phoenix_header(data: bytes) -> dict:
    if not data.startswith(PHOENIX_MAGIC):
        raise ImageFormatError("missing Phoenix magic '[PhoenixHeaderVer'", 0)
    end = data.find(PHOENIX_END)
    if end < 0:
        raise ImageFormatError("unterminated Phoenix header", len(data))
    header = {}
    for line in data[:end].splitlines():
        m = _KV.match(line)
        if m:
            header[m.group(1).decode("ascii")] = m.group(2).decode("ascii", "replace")
    header["_end"] = end + len(PHOENIX_END)
    return header


def _header_int(header, key):
    if key not in header:
        raise ImageFormatError(f"Phoenix header missing required key {key}")
    try:
        return int(header[key].split()[0])
    except (ValueError, IndexError):
        raise ImageFormatError(f"Phoenix key {key} is not an integer: {header[key]!r}") from None


def magnitude_to_gray(mag: np.ndarray) -> np.ndarray:
    """Min-max map magnitudes to [0, 255] with halves rounded up; constant -> 0."""
    mag = np.asarray(mag, dtype=np.float64)
    lo, hi = mag.min(), mag.max()
    if hi == lo:
        return np.zeros(mag.shape, dtype=np.uint8)
    return np.floor((mag - lo) * (255.0 / (hi - lo)) + 0.5).astype(np.uint8)


def load_mstar_phoenix(data: bytes) -> GrayImage:
    """Decode the magnitude block of an MSTAR Phoenix file (phase is ignored)."""
    data = bytes(data)
    header = parse_phoenix_header(data)
    cols = _header_int(header, "NumberOfColumns")
    rows = _header_int(header, "NumberOfRows")
    hdr_len = _header_int(header, "PhoenixHeaderLength")
    native = _header_int(header, "NativeHeaderLength") if "NativeHeaderLength" in header else 0
    if cols == 0 or rows == 0:
        raise ImageFormatError("zero dimension in Phoenix header", 0)
    offset = hdr_len + native
    if offset < header["_end"]:
        raise ImageFormatError("PhoenixHeaderLength shorter than header text", offset)
    need = rows * cols * 4
    if len(data) - offset < need:
        raise ImageFormatError(
            f"truncated magnitude block: need {need} bytes, have {max(len(data) - offset, 0)}",
            len(data))
    mag = np.frombuffer(data, dtype=">f4", count=rows * cols, offset=offset)
    if not np.all(np.isfinite(mag)):
        raise ImageFormatError("non-finite magnitude sample", offset)
    return GrayImage(magnitude_to_gray(mag.reshape(rows, cols)))


def load_image(path) -> GrayImage:
    """Read a chip from disk, dispatching on the leading magic bytes."""
    data = Path(path).read_bytes()
    if data.startswith(PHOENIX_MAGIC):
        return load_mstar_phoenix(data)
    if data[:2] in (b"P5", b"P2"):
        return load_pgm(data)
    raise ImageFormatError(f"unrecognized image format in {path}", 0)


# --------------------------------------------------------------------------
# geometry and gray levels
# --------------------------------------------------------------------------

def center_crop(img: GrayImage, w: int, h: int) -> GrayImage:
    """Centered ``w`` x ``h`` window; odd surplus is discarded right/bottom."""
    if w > img.width or h > img.height:
        raise ValueError(
            f"crop {w}x{h} exceeds source {img.width}x{img.height}")
    x0 = (img.width - w) // 2
    y0 = (img.height - h) // 2
    return GrayImage(img.pixels[y0:y0 + h, x0:x0 + w])


def fit_geometry(img: GrayImage, size) -> GrayImage:
    """Center crop to ``size`` x ``size`` when the chip is larger; never pads."""
    if size is None:
        return img
    return center_crop(img, min(size, img.width), min(size, img.height))


def quantize(img: GrayImage, levels: int = 32) -> QuantizedImage:
    """Per-image min-max binning ``floor((p - min) * levels / (max - min + 1))``."""
    if not 2 <= levels <= 256:
        raise ValueError(f"levels must be in [2, 256], got {levels}")
    px = img.pixels.astype(np.int64)
    lo, hi = int(px.min()), int(px.max())
    if lo == hi:
        return QuantizedImage(np.zeros_like(px), levels)
    return QuantizedImage((px - lo) * levels // (hi - lo + 1), levels)


def scan_manifest(root) -> DatasetManifest:
    """Enumerate ``<root>/<class>/<file>`` with classes in ascending name order."""
    root = Path(root)
    if not root.is_dir():
        raise ManifestError(f"{root} is not a directory")
    class_dirs = sorted(
        (d for d in os.scandir(root) if d.is_dir() and not d.name.startswith(".")),
        key=lambda d: d.name)
    if len(class_dirs) < 2:
        raise ManifestError(f"≥ 2 classes required, found {len(class_dirs)} under {root}")
    classes = tuple(ClassLabel(d.name, i) for i, d in enumerate(class_dirs))
    entries = []
    for label, d in zip(classes, class_dirs):
        files = sorted(
            f.name for f in os.scandir(d.path)
            if f.is_file() and not f.name.startswith("."))
        if not files:
            raise ManifestError(f"class directory {d.path} is empty")
        entries.extend((Path(d.path) / name, label) for name in files)
    return DatasetManifest(tuple(entries), classes)
