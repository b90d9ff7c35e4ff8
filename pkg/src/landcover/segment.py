"""Graph-based over-segmentation and greedy hierarchical region merging."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InfeasibleTarget, RegionOverflow
from .raster import Raster

COLOR_BINS = 25
ORIENT_BINS = 8
MAG_BINS = 10
# centered differences on 8-bit data cannot exceed 255 per axis
MAG_RANGE = 361.0


@dataclass(frozen=True)
class RegionPartition:
    """Dense per-pixel region ids with sizes and 4-adjacency."""

    region_id: np.ndarray  # (h, w) int32, values 0..num_regions-1
    num_regions: int
    sizes: np.ndarray  # (num_regions,) pixel counts
    adjacency: frozenset  # of (a, b) pairs with a < b

    def __post_init__(self):
        self.region_id.setflags(write=False)

    @property
    def height(self) -> int:
        return self.region_id.shape[0]

    @property
    def width(self) -> int:
        return self.region_id.shape[1]


@dataclass
class RegionStats:
    """Merge features of one region (selective-search style)."""

    color_hist: np.ndarray  # bands * COLOR_BINS, L1-normalized
    texture_hist: np.ndarray  # bands * ORIENT_BINS * MAG_BINS, L1-normalized
    size: int
    bbox: tuple  # (y0, x0, y1, x1), exclusive upper bounds

    def merged_with(self, other: "RegionStats") -> "RegionStats":
        total = self.size + other.size
        return RegionStats(
            (self.color_hist * self.size + other.color_hist * other.size) / total,
            (self.texture_hist * self.size + other.texture_hist * other.size) / total,
            total,
            (min(self.bbox[0], other.bbox[0]), min(self.bbox[1], other.bbox[1]),
             max(self.bbox[2], other.bbox[2]), max(self.bbox[3], other.bbox[3])),
        )


class _UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)
        self.count = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        if self.size[a] < self.size[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        self.count -= 1
        return a


def _grid_edges(samples: np.ndarray):
    """4-connected edges with Euclidean band-vector weights."""
    h, w, _ = samples.shape
    ids = np.arange(h * w).reshape(h, w)
    fs = samples.astype(np.float64)
    horiz_w = np.sqrt(((fs[:, 1:] - fs[:, :-1]) ** 2).sum(axis=2))
    vert_w = np.sqrt(((fs[1:, :] - fs[:-1, :]) ** 2).sum(axis=2))
    a = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    b = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    wgt = np.concatenate([horiz_w.ravel(), vert_w.ravel()])
    return a, b, wgt


def _dense_partition(root_of: np.ndarray, h: int, w: int) -> RegionPartition:
    """Relabel roots densely in row-major first-occurrence order."""
    vals, first, inv = np.unique(root_of, return_index=True, return_inverse=True)
    rank = np.empty(len(vals), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(vals))
    region = rank[inv].astype(np.int32).reshape(h, w)
    sizes = np.bincount(region.ravel(), minlength=len(vals))
    return RegionPartition(region, len(vals), sizes, _adjacency(region))


def _adjacency(region: np.ndarray) -> frozenset:
    pairs = set()
    for a, b in ((region[:, :-1], region[:, 1:]), (region[:-1, :], region[1:, :])):
        diff = a != b
        lo = np.minimum(a[diff], b[diff])
        hi = np.maximum(a[diff], b[diff])
        pairs.update(zip(lo.tolist(), hi.tolist()))
    return frozenset(pairs)


def initial_segmentation(r: Raster, k: float, sigma: float,
                         min_size: int) -> RegionPartition:
    """Felzenszwalb-style segmentation with a small-region cleanup pass.

    Components merge when the connecting edge weight is at most
    min(Int(C1) + k/|C1|, Int(C2) + k/|C2|); afterwards every region
    smaller than min_size is folded into its most-similar-edge neighbor.
    """
    if k <= 0 or sigma < 0 or min_size < 1:
        raise ValueError("need k > 0, sigma >= 0, min_size >= 1")
    h, w = r.height, r.width
    smoothed = r.samples.astype(np.float64)
    if sigma > 0:
        smoothed = np.stack(
            [ndimage.gaussian_filter(smoothed[:, :, b], sigma)
             for b in range(r.bands)], axis=2)
    a, b, wgt = _grid_edges(smoothed)
    order = np.argsort(wgt, kind="stable")
    a, b, wgt = a[order], b[order], wgt[order]

    uf = _UnionFind(h * w)
    # Int(C) + k/|C| per root; Int starts at 0 so the bound starts at k
    threshold = np.full(h * w, float(k))
    for i in range(len(wgt)):
        ra, rb = uf.find(a[i]), uf.find(b[i])
        if ra == rb:
            continue
        if wgt[i] <= threshold[ra] and wgt[i] <= threshold[rb]:
            root = uf.union(ra, rb)
            threshold[root] = wgt[i] + k / uf.size[root]

    # fold undersized components along their cheapest edges
    if min_size > 1:
        for i in range(len(wgt)):
            ra, rb = uf.find(a[i]), uf.find(b[i])
            if ra != rb and (uf.size[ra] < min_size or uf.size[rb] < min_size):
                uf.union(ra, rb)

    roots = np.array([uf.find(i) for i in range(h * w)], dtype=np.int64)
    return _dense_partition(roots, h, w)


def compute_region_stats(r: Raster, p: RegionPartition) -> list[RegionStats]:
    """Color and gradient-texture histograms plus size/bbox per region."""
    region = p.region_id
    n = p.num_regions
    flat = region.ravel()

    color = np.zeros((n, r.bands * COLOR_BINS))
    texture = np.zeros((n, r.bands * ORIENT_BINS * MAG_BINS))
    for band in range(r.bands):
        vals = r.samples[:, :, band].astype(np.int64)
        bins = (vals * COLOR_BINS) >> 8
        idx = flat * (r.bands * COLOR_BINS) + band * COLOR_BINS + bins.ravel()
        np.add.at(color.ravel(), idx, 1.0)

        fv = vals.astype(np.float64)
        gy, gx = np.gradient(fv)
        mag = np.sqrt(gx ** 2 + gy ** 2)
        mbin = np.minimum((mag / MAG_RANGE * MAG_BINS).astype(np.int64), MAG_BINS - 1)
        obin = np.minimum(((np.arctan2(gy, gx) + np.pi) / (2 * np.pi)
                           * ORIENT_BINS).astype(np.int64), ORIENT_BINS - 1)
        tbin = obin * MAG_BINS + mbin
        idx = (flat * (r.bands * ORIENT_BINS * MAG_BINS)
               + band * ORIENT_BINS * MAG_BINS + tbin.ravel())
        np.add.at(texture.ravel(), idx, 1.0)
    color /= color.sum(axis=1, keepdims=True)
    texture /= texture.sum(axis=1, keepdims=True)

    stats = []
    ys, xs = np.nonzero(region >= 0)
    y0 = np.full(n, p.height, dtype=np.int64)
    x0 = np.full(n, p.width, dtype=np.int64)
    y1 = np.zeros(n, dtype=np.int64)
    x1 = np.zeros(n, dtype=np.int64)
    np.minimum.at(y0, flat, ys)
    np.minimum.at(x0, flat, xs)
    np.maximum.at(y1, flat, ys)
    np.maximum.at(x1, flat, xs)
    for i in range(n):
        stats.append(RegionStats(color[i], texture[i], int(p.sizes[i]),
                                 (int(y0[i]), int(x0[i]), int(y1[i]) + 1,
                                  int(x1[i]) + 1)))
    return stats


def save_region_map(p: RegionPartition, path) -> None:
    """Debug dump: region ids as 16-bit grayscale PNG."""
    from PIL import Image

    if p.num_regions > 65536:
        raise RegionOverflow(f"{p.num_regions} regions exceed 16-bit id space")
    Image.fromarray(p.region_id.astype(np.uint16)).save(path)


def load_region_map(path) -> RegionPartition:
    from PIL import Image

    with Image.open(path) as img:
        region = np.asarray(img).astype(np.int64)
    return _dense_partition(region.ravel(), *region.shape)


DEFAULT_WEIGHTS = (1.0, 1.0, 1.0, 1.0)  # color, texture, size, fill


def similarity(a: RegionStats, b: RegionStats, image_size: int,
               weights=DEFAULT_WEIGHTS) -> float:
    """Selective-search similarity: color + texture + size + fill terms."""
    w_c, w_t, w_s, w_f = weights
    bbox = (min(a.bbox[0], b.bbox[0]), min(a.bbox[1], b.bbox[1]),
            max(a.bbox[2], b.bbox[2]), max(a.bbox[3], b.bbox[3]))
    bbox_size = (bbox[2] - bbox[0]) * (bbox[3] - bbox[1])
    s = (w_c * np.minimum(a.color_hist, b.color_hist).sum()
         + w_t * np.minimum(a.texture_hist, b.texture_hist).sum()
         + w_s * (1.0 - (a.size + b.size) / image_size)
         + w_f * (1.0 - (bbox_size - a.size - b.size) / image_size))
    return float(np.clip(s, 0.0, sum(weights)))


@dataclass(frozen=True)
class StopCriterion:
    """Exactly one of target_regions or min_similarity."""

    target_regions: int | None = None
    min_similarity: float | None = None

    def __post_init__(self):
        if (self.target_regions is None) == (self.min_similarity is None):
            raise ValueError("set exactly one of target_regions / min_similarity")


class MergeEngine:
    """Greedy highest-similarity merging with a lazy stale-entry heap.

    Ids are stable: a merge result adopts min(a, b). Ties break by smaller
    combined size, then by the smaller (min_id, max_id) pair.
    """

    def __init__(self, p: RegionPartition, stats: list[RegionStats],
                 weights=DEFAULT_WEIGHTS):
        self.image_size = p.height * p.width
        self.weights = weights
        self.shape = (p.height, p.width)
        self.region_of = p.region_id.copy()  # stable (non-dense) ids
        self.stats = {i: stats[i] for i in range(p.num_regions)}
        self.neighbors = {i: set() for i in range(p.num_regions)}
        for pa, pb in p.adjacency:
            self.neighbors[pa].add(pb)
            self.neighbors[pb].add(pa)
        self.generation = {i: 0 for i in range(p.num_regions)}
        self.heap = []
        for pa, pb in p.adjacency:
            self._push(pa, pb)

    def _push(self, a: int, b: int):
        if a > b:
            a, b = b, a
        s = similarity(self.stats[a], self.stats[b], self.image_size, self.weights)
        combined = self.stats[a].size + self.stats[b].size
        heapq.heappush(self.heap, (-s, combined, a, b,
                                   self.generation[a], self.generation[b]))

    @property
    def num_regions(self) -> int:
        return len(self.stats)

    def best_pair(self):
        """(similarity, a, b) of the next merge, or None if no pair remains."""
        while self.heap:
            negs, _, a, b, ga, gb = self.heap[0]
            if (a in self.stats and b in self.stats
                    and self.generation[a] == ga and self.generation[b] == gb):
                return -negs, a, b
            heapq.heappop(self.heap)
        return None

    def merge_once(self):
        """Merge the best pair; returns (similarity, kept_id, removed_id)."""
        top = self.best_pair()
        if top is None:
            return None
        s, a, b = top
        heapq.heappop(self.heap)
        keep, drop = (a, b) if a < b else (b, a)
        self.stats[keep] = self.stats[keep].merged_with(self.stats.pop(drop))
        self.region_of[self.region_of == drop] = keep
        new_neigh = (self.neighbors[keep] | self.neighbors.pop(drop)) - {keep, drop}
        for n in new_neigh:
            self.neighbors[n].discard(drop)
            self.neighbors[n].add(keep)
        self.neighbors[keep] = new_neigh
        self.generation[keep] += 1
        for n in new_neigh:
            self._push(keep, n)
        return s, keep, drop

    def partition(self) -> RegionPartition:
        """Current state as a dense RegionPartition."""
        return _dense_partition(self.region_of.ravel().astype(np.int64),
                                *self.shape)


def hierarchical_merge(p: RegionPartition, stats: list[RegionStats],
                       stop: StopCriterion,
                       weights=DEFAULT_WEIGHTS) -> RegionPartition:
    """Greedily merge the most similar adjacent pair until the stop rule."""
    engine = MergeEngine(p, stats, weights)
    if stop.target_regions is not None:
        if stop.target_regions > p.num_regions:
            raise InfeasibleTarget(
                f"target {stop.target_regions} > current {p.num_regions}")
        while engine.num_regions > stop.target_regions:
            engine.merge_once()
    else:
        while True:
            top = engine.best_pair()
            if top is None or top[0] < stop.min_similarity:
                break
            engine.merge_once()
    return engine.partition()
