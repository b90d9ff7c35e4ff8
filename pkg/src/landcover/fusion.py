"""Combining classification and segmentation: rasterization, scale fusion,
per-segment majority voting."""

from __future__ import annotations

import numpy as np

from .classify import ProbabilityMap
from .errors import ExtentMismatch, GridMismatch
from .raster import LabelMask
from .sampling import grid_shape
from .segment import RegionPartition


def _check_extent(pm: ProbabilityMap, width: int, height: int):
    if (pm.width, pm.height) != (width, height):
        raise ExtentMismatch(
            f"probability map covers {pm.width}x{pm.height}, need {width}x{height}")
    if grid_shape(width, height, pm.cell_stride) != (pm.grid_h, pm.grid_w):
        raise ExtentMismatch("cell grid does not cover the extent")


def _cell_argmax(pm: ProbabilityMap) -> np.ndarray:
    # ties break toward the lower category id (np.argmax takes the first max)
    return np.argmax(pm.probs, axis=2).astype(np.int32) + 1


def _pixel_cells(pm: ProbabilityMap):
    """Per-pixel (cell_row, cell_col) under the grid-ownership rule."""
    rows = np.minimum(np.arange(pm.height) // pm.cell_stride, pm.grid_h - 1)
    cols = np.minimum(np.arange(pm.width) // pm.cell_stride, pm.grid_w - 1)
    return rows, cols


def rasterize(pm: ProbabilityMap, width: int, height: int) -> LabelMask:
    """Paint every pixel with its owning cell's argmax category."""
    _check_extent(pm, width, height)
    cell_label = _cell_argmax(pm)
    rows, cols = _pixel_cells(pm)
    return LabelMask(cell_label[np.ix_(rows, cols)], pm.num_classes)


def sum_scales(maps) -> ProbabilityMap:
    """Elementwise per-cell sum over maps, divided by the map count."""
    maps = list(maps)
    if not maps:
        raise ValueError("need at least one probability map")
    first = maps[0]
    for m in maps[1:]:
        if (m.probs.shape != first.probs.shape
                or m.cell_stride != first.cell_stride
                or (m.width, m.height) != (first.width, first.height)):
            raise GridMismatch("probability maps disagree on grid geometry")
    if len(maps) == 1:
        return first
    total = np.sum([m.probs for m in maps], axis=0) / len(maps)
    return ProbabilityMap(total, first.cell_stride, first.width, first.height)


def vote(partition: RegionPartition, pm: ProbabilityMap) -> LabelMask:
    """Relabel every region with its modal pixel-argmax category.

    Ties break by larger summed probability mass over the region, then by
    the lower category id.
    """
    _check_extent(pm, partition.width, partition.height)
    c = pm.num_classes
    rows, cols = _pixel_cells(pm)
    pixel_label = _cell_argmax(pm)[np.ix_(rows, cols)]  # 1..C per pixel
    region = partition.region_id
    n = partition.num_regions

    counts = np.zeros((n, c), dtype=np.int64)
    np.add.at(counts, (region.ravel(), pixel_label.ravel() - 1), 1)

    pixel_probs = pm.probs[np.ix_(rows, cols)]  # (h, w, C)
    mass = np.zeros((n, c))
    np.add.at(mass, region.ravel(), pixel_probs.reshape(-1, c))

    # lexicographic winner: count, then mass, then lower id
    winner = np.zeros(n, dtype=np.int32)
    for i in range(n):
        top = np.flatnonzero(counts[i] == counts[i].max())
        if len(top) > 1:
            top = top[mass[i, top] == mass[i, top].max()]
        winner[i] = top[0] + 1
    return LabelMask(winner[region], c)
