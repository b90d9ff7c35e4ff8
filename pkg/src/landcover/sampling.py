"""Grid tiling, stratified center sampling, window extraction, and warping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CenterOutOfBounds, InsufficientSamples, WindowOutOfBounds
from .raster import LabelMask, Raster


@dataclass(frozen=True)
class Window:
    """Square pixel window; undersized marks a full-extent fallback."""

    x: int
    y: int
    width: int
    height: int
    undersized: bool = False

    @property
    def size(self) -> int:
        return max(self.width, self.height)


@dataclass(frozen=True)
class Patch:
    """Pixel-exact (or resized) window contents, shape (h, w, bands)."""

    samples: np.ndarray
    source_window: Window

    def __post_init__(self):
        self.samples.setflags(write=False)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def bands(self) -> int:
        return self.samples.shape[2]


def _clamped_window(x: int, y: int, size: int, width: int, height: int) -> Window:
    if size > width or size > height:
        return Window(0, 0, width, height, undersized=True)
    x = min(max(x, 0), width - size)
    y = min(max(y, 0), height - size)
    return Window(x, y, size, size)


def grid_windows(width: int, height: int, size: int) -> list[Window]:
    """Tile the extent with stride = size; edge windows clamp inward.

    Cell (r, c) owns pixel rows [r*size, min((r+1)*size, height)) and the
    matching columns, so ownership stays unambiguous even where clamped
    edge windows overlap their neighbors.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if size > width or size > height:
        return [Window(0, 0, width, height, undersized=True)]
    ncols = -(-width // size)
    nrows = -(-height // size)
    out = []
    for r in range(nrows):
        for c in range(ncols):
            out.append(_clamped_window(c * size, r * size, size, width, height))
    return out


def grid_shape(width: int, height: int, size: int) -> tuple[int, int]:
    """(rows, cols) of the grid produced by grid_windows."""
    if size > width or size > height:
        return 1, 1
    return -(-height // size), -(-width // size)


def cell_bounds(r: int, c: int, size: int, width: int, height: int):
    """Owned pixel range of grid cell (r, c): (y0, y1, x0, x1)."""
    return (r * size, min((r + 1) * size, height),
            c * size, min((c + 1) * size, width))


def sample_centers(mask: LabelMask, per_class: int, rng_seed: int):
    """Uniform without-replacement centers per category present in the mask.

    Returns (x, y, label) triples grouped by ascending category; label 0
    is never sampled. Deterministic given rng_seed.
    """
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    rng = np.random.default_rng(rng_seed)
    out = []
    labels = mask.labels
    for cat in range(1, mask.num_classes + 1):
        ys, xs = np.nonzero(labels == cat)
        n = len(xs)
        if n == 0:
            continue
        if n < per_class:
            raise InsufficientSamples(cat, available=n, requested=per_class)
        pick = rng.choice(n, size=per_class, replace=False)
        out.extend((int(xs[i]), int(ys[i]), cat) for i in pick)
    return out


def window_at(center, scale: int, width: int, height: int) -> Window:
    """Square window of side `scale` centered at `center`, clamped inside."""
    cx, cy = center
    if not (0 <= cx < width and 0 <= cy < height):
        raise CenterOutOfBounds(f"center {center} outside {width}x{height}")
    return _clamped_window(cx - scale // 2, cy - scale // 2, scale, width, height)


def extract(r: Raster, w: Window) -> Patch:
    """Pixel-exact copy of the window contents."""
    if w.x < 0 or w.y < 0 or w.x + w.width > r.width or w.y + w.height > r.height:
        raise WindowOutOfBounds(f"{w} outside {r.width}x{r.height}")
    return Patch(r.samples[w.y:w.y + w.height, w.x:w.x + w.width].copy(), w)


def resize(p: Patch, target: int) -> Patch:
    """Warp a patch to target x target with corner-aligned bilinear filtering.

    Identity (bit-exact) when the source is already target x target.
    Rounding is floor(v + 0.5).
    """
    if target < 1:
        raise ValueError("target must be >= 1")
    if p.height == target and p.width == target:
        return p
    src = p.samples.astype(np.float64)
    h, w = p.height, p.width

    def axis_coords(n_src, n_dst):
        if n_dst == 1 or n_src == 1:
            return np.zeros(n_dst)
        return np.arange(n_dst) * (n_src - 1) / (n_dst - 1)

    ys = axis_coords(h, target)
    xs = axis_coords(w, target)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    return Patch(np.floor(out + 0.5).astype(np.uint8), p.source_window)
