"""Random-forest classifier, raster-scale inference, probability-grid I/O."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    MalformedHeader,
    NonStochasticRow,
)
from .features import FeatureRecipe
from .raster import Raster
from .sampling import cell_bounds, extract, grid_shape, resize, window_at

PGRD_MAGIC = b"PGRD"
PGRD_VERSION = 1
STOCHASTIC_TOL = 1e-3


@dataclass(frozen=True)
class TrainingSet:
    """N feature rows of equal length with labels in 1..num_classes."""

    features: np.ndarray  # (N, d) float64
    labels: np.ndarray  # (N,) int, values 1..C
    num_classes: int

    def __post_init__(self):
        if self.features.ndim != 2 or len(self.features) == 0:
            raise EmptyTrainingSet("need at least one sample")
        if self.features.shape[1] == 0:
            raise DimensionMismatch("feature dimension is zero")
        if len(self.labels) != len(self.features):
            raise DimensionMismatch("labels/features length mismatch")
        if self.labels.min() < 1 or self.labels.max() > self.num_classes:
            raise ValueError("labels must lie in 1..num_classes")


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 16
    min_leaf: int = 2

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("forest params must be >= 1")


@dataclass
class _Tree:
    # parallel node arrays; children -1 marks a leaf, leaf_dist row sums to 1
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_dist: np.ndarray


@dataclass(frozen=True)
class ForestModel:
    trees: list
    params: ForestParams
    n_features: int
    num_classes: int
    seed: int


def _gini_best_split(X, y, num_classes, candidates, min_leaf):
    """Best (feature, threshold, gini) over candidate features; None if no split."""
    n = len(y)
    best = None
    onehot = np.zeros((n, num_classes))
    onehot[np.arange(n), y - 1] = 1.0
    for f in candidates:
        order = np.argsort(X[:, f], kind="stable")
        xv = X[order, f]
        counts = np.cumsum(onehot[order], axis=0)  # class counts left of cut i+1
        total = counts[-1]
        # cut after position i (1..n-1), only where value changes
        cut = np.nonzero(xv[1:] > xv[:-1])[0]
        if len(cut) == 0:
            continue
        nl = (cut + 1).astype(np.float64)
        nr = n - nl
        keep = (nl >= min_leaf) & (nr >= min_leaf)
        if not keep.any():
            continue
        cut, nl, nr = cut[keep], nl[keep], nr[keep]
        cl = counts[cut]
        cr = total - cl
        gini = (nl - (cl ** 2).sum(axis=1) / nl) + (nr - (cr ** 2).sum(axis=1) / nr)
        i = int(np.argmin(gini))
        g = float(gini[i]) / n
        if best is None or g < best[2]:
            thr = 0.5 * (xv[cut[i]] + xv[cut[i] + 1])
            best = (int(f), float(thr), g)
    return best


def _grow_tree(X, y, num_classes, params, rng):
    n, d = X.shape
    k = max(1, int(np.floor(np.sqrt(d))))
    feature, threshold, left, right, dists = [], [], [], [], []

    def leaf(idx):
        counts = np.bincount(y[idx], minlength=num_classes + 1)[1:]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        dists.append(counts / counts.sum())
        return len(feature) - 1

    def build(idx, depth):
        ys = y[idx]
        if depth >= params.max_depth or len(idx) < 2 * params.min_leaf \
                or (ys == ys[0]).all():
            return leaf(idx)
        candidates = rng.choice(d, size=k, replace=False)
        split = _gini_best_split(X[idx], ys, num_classes, candidates, params.min_leaf)
        if split is None:
            return leaf(idx)
        f, thr, _ = split
        node = len(feature)
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        dists.append(np.zeros(num_classes))
        go_left = X[idx, f] <= thr
        left[node] = build(idx[go_left], depth + 1)
        right[node] = build(idx[~go_left], depth + 1)
        return node

    build(np.arange(n), 0)
    return _Tree(
        np.array(feature, dtype=np.int32),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(dists, dtype=np.float64),
    )


def train_forest(ts: TrainingSet, params: ForestParams = ForestParams(),
                 rng_seed: int = 0) -> ForestModel:
    """Bagged Gini trees with sqrt(d) candidate features and midpoint thresholds.

    Per-tree RNG streams are spawned deterministically from the master seed,
    so serial and per-tree-parallel training agree.
    """
    X, y = ts.features, ts.labels.astype(np.int64)
    n = len(X)
    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng(np.random.SeedSequence(rng_seed).spawn(t + 1)[-1])
        boot = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X[boot], y[boot], ts.num_classes, params, rng))
    return ForestModel(trees, params, X.shape[1], ts.num_classes, rng_seed)


def _tree_proba(tree: _Tree, x: np.ndarray) -> np.ndarray:
    node = 0
    while tree.feature[node] >= 0:
        if x[tree.feature[node]] <= tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    return tree.leaf_dist[node]


def predict_proba(model: ForestModel, features: np.ndarray) -> np.ndarray:
    """Average of per-tree leaf distributions; accepts one row or a batch."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"feature length {x.shape[1]} != model dimension {model.n_features}")
    out = np.zeros((len(x), model.num_classes))
    for tree in model.trees:
        for i in range(len(x)):
            out[i] += _tree_proba(tree, x[i])
    out /= len(model.trees)
    return out[0] if single else out


def save_model(model: ForestModel, path) -> None:
    doc = {
        "format": "landcover-forest",
        "version": 1,
        "n_features": model.n_features,
        "num_classes": model.num_classes,
        "seed": model.seed,
        "params": {"n_trees": model.params.n_trees,
                   "max_depth": model.params.max_depth,
                   "min_leaf": model.params.min_leaf},
        "trees": [
            {"feature": t.feature.tolist(), "threshold": t.threshold.tolist(),
             "left": t.left.tolist(), "right": t.right.tolist(),
             "leaf_dist": t.leaf_dist.tolist()}
            for t in model.trees
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> ForestModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "landcover-forest":
        raise MalformedHeader(f"{path} is not a forest model file")
    trees = [
        _Tree(np.array(t["feature"], dtype=np.int32),
              np.array(t["threshold"], dtype=np.float64),
              np.array(t["left"], dtype=np.int32),
              np.array(t["right"], dtype=np.int32),
              np.array(t["leaf_dist"], dtype=np.float64))
        for t in doc["trees"]
    ]
    p = doc["params"]
    return ForestModel(trees, ForestParams(p["n_trees"], p["max_depth"], p["min_leaf"]),
                       doc["n_features"], doc["num_classes"], doc["seed"])


@dataclass(frozen=True)
class ProbabilityMap:
    """Per-grid-cell class probabilities with cell->pixel geometry.

    probs has shape (grid_h, grid_w, C); cell (r, c) owns the pixel block
    given by cell_bounds(r, c, cell_stride, width, height).
    """

    probs: np.ndarray
    cell_stride: int
    width: int
    height: int

    def __post_init__(self):
        if self.probs.ndim != 3:
            raise ValueError("probs must be (grid_h, grid_w, C)")
        sums = self.probs.sum(axis=2)
        if np.abs(sums - 1.0).max() > 1e-6:
            raise NonStochasticRow("cell vectors must sum to 1")
        self.probs.setflags(write=False)

    @property
    def grid_h(self) -> int:
        return self.probs.shape[0]

    @property
    def grid_w(self) -> int:
        return self.probs.shape[1]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[2]


def classify_raster_per_scale(r: Raster, model: ForestModel, recipe: FeatureRecipe,
                              scales, base_stride: int | None = None) -> list:
    """One ProbabilityMap per scale, all on the base-stride grid.

    Every cell's windows at all scales share the base cell's center.
    """
    scales = sorted(set(int(s) for s in scales))
    if not scales:
        raise ValueError("scales must be non-empty")
    stride = base_stride if base_stride is not None else min(scales)
    rows, cols = grid_shape(r.width, r.height, stride)
    maps = []
    for scale in scales:
        probs = np.zeros((rows, cols, model.num_classes))
        for gr in range(rows):
            for gc in range(cols):
                y0, y1, x0, x1 = cell_bounds(gr, gc, stride, r.width, r.height)
                center = ((x0 + x1) // 2, (y0 + y1) // 2)
                w = window_at(center, scale, r.width, r.height)
                patch = resize(extract(r, w), recipe.canonical_size)
                probs[gr, gc] = predict_proba(model, recipe.extract(patch).values)
        maps.append(ProbabilityMap(probs, stride, r.width, r.height))
    return maps


def classify_raster(r: Raster, model: ForestModel, recipe: FeatureRecipe,
                    scales, base_stride: int | None = None) -> ProbabilityMap:
    """Multi-scale patch classification: per-scale vectors summed per cell
    and renormalized (a single scale yields plain per-patch probabilities)."""
    from .fusion import sum_scales

    return sum_scales(classify_raster_per_scale(r, model, recipe, scales, base_stride))


_HEADER = struct.Struct("<4sHIIIH")


def export_probabilities(pm: ProbabilityMap, path) -> None:
    """Write the binary probability grid plus a JSON sidecar for inspection."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(PGRD_MAGIC, PGRD_VERSION, pm.grid_w, pm.grid_h,
                              pm.cell_stride, pm.num_classes))
        fh.write(pm.probs.astype("<f4").tobytes())
    sidecar = {
        "magic": "PGRD", "version": PGRD_VERSION,
        "grid_w": pm.grid_w, "grid_h": pm.grid_h,
        "cell_stride": pm.cell_stride, "num_classes": pm.num_classes,
        "width": pm.width, "height": pm.height,
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2)


def import_probabilities(path, width: int | None = None,
                         height: int | None = None) -> ProbabilityMap:
    """Read a probability grid; optionally validate against a raster extent.

    Without an explicit extent the nominal grid_w*stride x grid_h*stride
    extent is assumed (the JSON sidecar, when present, supplies the real one).
    """
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise MalformedHeader(f"{path}: truncated header")
        magic, version, grid_w, grid_h, stride, num_classes = _HEADER.unpack(head)
        if magic != PGRD_MAGIC or version != PGRD_VERSION:
            raise MalformedHeader(f"{path}: bad magic or version")
        if grid_w < 1 or grid_h < 1 or stride < 1 or num_classes < 1:
            raise MalformedHeader(f"{path}: degenerate grid header")
        payload = fh.read()
    expected = grid_w * grid_h * num_classes * 4
    if len(payload) != expected:
        raise MalformedHeader(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    probs = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    probs = probs.reshape(grid_h, grid_w, num_classes)
    sums = probs.sum(axis=2)
    if np.abs(sums - 1.0).max() > STOCHASTIC_TOL:
        r, c = np.unravel_index(np.argmax(np.abs(sums - 1.0)), sums.shape)
        raise NonStochasticRow(f"cell ({r},{c}) sums to {sums[r, c]:.6f}")
    if width is None and height is None:
        try:
            with open(str(path) + ".json") as fh:
                sidecar = json.load(fh)
            width, height = sidecar["width"], sidecar["height"]
        except (OSError, KeyError, ValueError):
            width, height = grid_w * stride, grid_h * stride
    if grid_shape(width, height, stride) != (grid_h, grid_w):
        raise DimensionMismatch(
            f"grid {grid_w}x{grid_h} @ stride {stride} does not cover "
            f"{width}x{height}")
    # rows within 1e-6 of 1 are kept verbatim so the file round-trip stays
    # bit-exact; sloppier (but accepted) rows are renormalized
    off = np.abs(sums - 1.0) > 1e-6
    if off.any():
        probs = probs.copy()
        probs[off] /= sums[off][:, None]
    return ProbabilityMap(probs, stride, width, height)
