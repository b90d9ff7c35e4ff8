"""Raster and label-mask data types, file I/O, and preprocessing.

Rasters are stored as numpy arrays of shape (height, width, bands).
8-bit data lives in uint8; 16-bit inputs are kept in uint16 until
``preprocess`` requantizes them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import tifffile
from PIL import Image, UnidentifiedImageError

from .errors import (
    BandIndexOutOfRange,
    UnknownColor,
    UnreadableFile,
    UnsupportedFormat,
)

MAX_BANDS = 4


@dataclass(frozen=True)
class Raster:
    """Multi-band image grid; samples has shape (height, width, bands)."""

    samples: np.ndarray

    def __post_init__(self):
        s = self.samples
        if s.ndim != 3:
            raise ValueError("samples must be (height, width, bands)")
        if s.shape[0] < 1 or s.shape[1] < 1:
            raise ValueError("raster must be at least 1x1")
        if not 1 <= s.shape[2] <= MAX_BANDS:
            raise ValueError(f"band count must be 1..{MAX_BANDS}")
        if s.dtype not in (np.uint8, np.uint16):
            raise ValueError("samples must be uint8 or uint16")
        s.setflags(write=False)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def bands(self) -> int:
        return self.samples.shape[2]


@dataclass(frozen=True)
class LabelMask:
    """Per-pixel category ids in {0..num_classes}; 0 means unknown."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        if self.labels.ndim != 2:
            raise ValueError("labels must be (height, width)")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if self.labels.max(initial=0) > self.num_classes:
            raise ValueError("label exceeds num_classes")
        self.labels.setflags(write=False)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


# Conventional land-cover coloring; 0 (unknown) is black by contract.
DEFAULT_PALETTE_ENTRIES = {
    0: (0, 0, 0),
    1: (255, 0, 0),  # built-up
    2: (0, 255, 0),  # farmland
    3: (0, 255, 255),  # forest
    4: (255, 255, 0),  # meadow
    5: (0, 0, 255),  # waters
}


@dataclass(frozen=True)
class ClassPalette:
    """Injective category-id -> RGB mapping; entry 0 must be black."""

    entries: dict = field(default_factory=lambda: dict(DEFAULT_PALETTE_ENTRIES))

    def __post_init__(self):
        if self.entries.get(0) != (0, 0, 0):
            raise ValueError("palette entry 0 must be black")
        colors = list(self.entries.values())
        if len(set(colors)) != len(colors):
            raise ValueError("palette colors must be distinct")

    def color(self, label: int) -> tuple:
        return self.entries[label]

    def label_of(self, color: tuple) -> int:
        for k, v in self.entries.items():
            if v == tuple(color):
                return k
        raise UnknownColor(f"color {tuple(color)} not in palette")


DEFAULT_PALETTE = ClassPalette()


def load_raster(path) -> Raster:
    """Read a PNG or TIFF into a Raster; 16-bit fidelity is retained."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(4)
    except OSError as e:
        raise UnreadableFile(f"cannot open {path}: {e}") from e
    if head[:4] in (b"II*\x00", b"MM\x00*"):
        try:
            arr = tifffile.imread(path)
        except (OSError, ValueError, tifffile.TiffFileError) as e:
            raise UnreadableFile(f"cannot read TIFF {path}: {e}") from e
    else:
        try:
            with Image.open(path) as img:
                arr = np.asarray(img)
        except (OSError, UnidentifiedImageError, ValueError) as e:
            raise UnreadableFile(f"cannot read {path}: {e}") from e
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise UnsupportedFormat(f"unsupported array shape {arr.shape}")
    if arr.shape[2] > MAX_BANDS:
        raise UnsupportedFormat(f"{arr.shape[2]} channels exceeds {MAX_BANDS}")
    if arr.dtype == np.uint8 or arr.dtype == np.uint16:
        pass
    else:
        raise UnsupportedFormat(f"unsupported sample type {arr.dtype}")
    return Raster(np.ascontiguousarray(arr))


def save_raster(r: Raster, path) -> None:
    """Write a Raster as an uncompressed TIFF (PNG for 8-bit via suffix)."""
    arr = r.samples
    if str(path).lower().endswith(".png"):
        if arr.dtype != np.uint8 and not (arr.dtype == np.uint16 and r.bands == 1):
            raise UnsupportedFormat("PNG output supports 8-bit or 16-bit gray")
        img = Image.fromarray(arr[:, :, 0] if r.bands == 1 else arr)
        img.save(path)
    else:
        tifffile.imwrite(path, arr[:, :, 0] if r.bands == 1 else arr)


def preprocess(r: Raster, keep_bands, requantize: bool = True) -> Raster:
    """Select/reorder bands and linearly requantize samples to 8-bit.

    16-bit sources map v -> round(v * 255 / 65535) over the full nominal
    range (image-independent, monotone); 8-bit sources pass through.
    """
    keep_bands = list(keep_bands)
    if not keep_bands:
        raise BandIndexOutOfRange("keep_bands must be non-empty")
    for b in keep_bands:
        if not 0 <= b < r.bands:
            raise BandIndexOutOfRange(f"band {b} not in 0..{r.bands - 1}")
    arr = r.samples[:, :, keep_bands]
    if requantize and arr.dtype == np.uint16:
        arr = np.floor(arr.astype(np.float64) * 255.0 / 65535.0 + 0.5).astype(np.uint8)
    return Raster(np.ascontiguousarray(arr))


def save_mask(m: LabelMask, path, palette: ClassPalette = DEFAULT_PALETTE) -> None:
    """Write a label mask as an 8-bit RGB PNG using the palette."""
    present = np.unique(m.labels)
    lut = np.zeros((int(present.max(initial=0)) + 1, 3), dtype=np.uint8)
    for lab in present:
        lut[lab] = palette.color(int(lab))
    rgb = lut[m.labels]
    Image.fromarray(rgb, mode="RGB").save(path)


def load_mask(path, palette: ClassPalette = DEFAULT_PALETTE,
              num_classes: int | None = None) -> LabelMask:
    """Read an RGB PNG mask back into labels; unknown colors are rejected."""
    try:
        with Image.open(path) as img:
            rgb = np.asarray(img.convert("RGB"))
    except (OSError, UnidentifiedImageError) as e:
        raise UnreadableFile(f"cannot read mask {path}: {e}") from e
    packed = (rgb[:, :, 0].astype(np.uint32) << 16) | \
             (rgb[:, :, 1].astype(np.uint32) << 8) | rgb[:, :, 2]
    labels = np.zeros(packed.shape, dtype=np.int32)
    known = np.zeros(packed.shape, dtype=bool)
    for lab, (cr, cg, cb) in palette.entries.items():
        key = (cr << 16) | (cg << 8) | cb
        hit = packed == key
        labels[hit] = lab
        known |= hit
    if not known.all():
        bad = np.argwhere(~known)[0]
        c = rgb[bad[0], bad[1]]
        raise UnknownColor(f"color {tuple(int(v) for v in c)} not in palette")
    if num_classes is None:
        num_classes = max(k for k in palette.entries)
    return LabelMask(labels, num_classes)
