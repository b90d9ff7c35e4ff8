"""End-to-end orchestration: config schema and the full classify/segment/vote
pipeline used by the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import fusion, metrics, segment
from .classify import (
    ForestModel,
    ForestParams,
    TrainingSet,
    classify_raster_per_scale,
    import_probabilities,
    train_forest,
)
from .errors import ConfigError
from .features import FeatureRecipe
from .raster import LabelMask, Raster, preprocess
from .sampling import extract, resize, sample_centers, window_at

DEFAULT_SCALES = (56, 112, 224)


@dataclass(frozen=True)
class SegmentationConfig:
    k: float = 500.0
    sigma: float = 0.8
    min_size: int = 64
    stop: segment.StopCriterion = field(
        default_factory=lambda: segment.StopCriterion(min_similarity=2.0))


@dataclass(frozen=True)
class PipelineConfig:
    raster_path: str
    truth_path: str | None
    recipe: FeatureRecipe
    forest: ForestParams | None  # exclusive with probabilities_path
    probabilities_path: str | None
    per_class: int
    scales: tuple
    base_stride: int | None
    segmentation: SegmentationConfig
    order: str  # "fuse-then-vote" | "vote-then-fuse"
    out_dir: str
    rng_seed: int
    keep_bands: tuple | None = None

    def __post_init__(self):
        if not self.scales:
            raise ConfigError("scales must be non-empty")
        if (self.forest is None) == (self.probabilities_path is None):
            raise ConfigError(
                "exactly one classifier source: forest params or probability file")
        if self.order not in ("fuse-then-vote", "vote-then-fuse"):
            raise ConfigError(f"unknown stage order {self.order!r}")
        if self.forest is not None and self.truth_path is None:
            raise ConfigError("training a forest requires a truth mask")


def load_config(path, seed_override=None, out_override=None) -> PipelineConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        feats = doc.get("features", {})
        recipe = FeatureRecipe(
            blocks=tuple(feats.get("blocks", ("ch", "glcm", "lbp"))),
            canonical_size=int(feats.get("canonical_size", 224)),
            ch_bins=int(feats.get("ch_bins", 32)),
            glcm_levels=int(feats.get("glcm_levels", 32)),
        )
        cls = doc.get("classifier", {})
        if "forest" in cls and "probabilities" in cls:
            raise ConfigError("classifier specifies both forest and probabilities")
        forest = None
        if "forest" in cls:
            f = cls["forest"]
            forest = ForestParams(int(f.get("n_trees", 100)),
                                  int(f.get("max_depth", 16)),
                                  int(f.get("min_leaf", 2)))
        seg = doc.get("segmentation", {})
        stop_doc = seg.get("stop", {"min_similarity": 2.0})
        stop = segment.StopCriterion(
            target_regions=stop_doc.get("target_regions"),
            min_similarity=stop_doc.get("min_similarity"))
        keep = doc.get("keep_bands")
        return PipelineConfig(
            raster_path=doc["raster"],
            truth_path=doc.get("truth"),
            recipe=recipe,
            forest=forest,
            probabilities_path=cls.get("probabilities"),
            per_class=int(cls.get("per_class", 200)),
            scales=tuple(int(s) for s in doc.get("scales", DEFAULT_SCALES)),
            base_stride=doc.get("base_stride"),
            segmentation=SegmentationConfig(
                k=float(seg.get("k", 500.0)),
                sigma=float(seg.get("sigma", 0.8)),
                min_size=int(seg.get("min_size", 64)),
                stop=stop),
            order=doc.get("order", "fuse-then-vote"),
            out_dir=out_override or doc.get("out_dir", "."),
            rng_seed=seed_override if seed_override is not None
            else int(doc.get("rng_seed", 0)),
            keep_bands=tuple(keep) if keep is not None else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad config {path}: {e}") from e


def build_training_set(r: Raster, mask: LabelMask, centers, recipe: FeatureRecipe,
                       scales) -> TrainingSet:
    """Multi-scale training patches around class-labeled centers, warped to
    the recipe's canonical size; each patch carries its center's label."""
    feats, labels = [], []
    for x, y, lab in centers:
        for s in sorted(set(scales)):
            w = window_at((x, y), s, r.width, r.height)
            patch = resize(extract(r, w), recipe.canonical_size)
            feats.append(recipe.extract(patch).values)
            labels.append(lab)
    return TrainingSet(np.array(feats), np.array(labels, dtype=np.int64),
                       mask.num_classes)


def train_from_scene(r: Raster, mask: LabelMask, cfg: PipelineConfig) -> ForestModel:
    centers = sample_centers(mask, cfg.per_class, cfg.rng_seed)
    ts = build_training_set(r, mask, centers, cfg.recipe, cfg.scales)
    return train_forest(ts, cfg.forest, cfg.rng_seed)


def majority_across_masks(masks) -> LabelMask:
    """Per-pixel majority over equally-sized masks; ties to the lower label."""
    stack = np.stack([m.labels for m in masks])
    c = max(m.num_classes for m in masks)
    counts = np.zeros((c,) + stack.shape[1:], dtype=np.int32)
    for lab in range(1, c + 1):
        counts[lab - 1] = (stack == lab).sum(axis=0)
    return LabelMask(np.argmax(counts, axis=0).astype(np.int32) + 1, c)


@dataclass
class PipelineResult:
    fused_map: object
    patch_pred: LabelMask
    partition: segment.RegionPartition
    final_pred: LabelMask
    report: dict | None


def run_pipeline(cfg: PipelineConfig, r: Raster,
                 truth: LabelMask | None) -> PipelineResult:
    """sample -> features -> train/import -> classify -> fuse -> segment -> vote."""
    if cfg.keep_bands is not None:
        r = preprocess(r, cfg.keep_bands)
    if cfg.forest is not None:
        model = train_from_scene(r, truth, cfg)
        per_scale = classify_raster_per_scale(r, model, cfg.recipe, cfg.scales,
                                              cfg.base_stride)
        fused = fusion.sum_scales(per_scale)
    else:
        fused = import_probabilities(cfg.probabilities_path, r.width, r.height)
        per_scale = [fused]

    patch_pred = fusion.rasterize(fused, r.width, r.height)

    seg_cfg = cfg.segmentation
    part = segment.initial_segmentation(r, seg_cfg.k, seg_cfg.sigma, seg_cfg.min_size)
    stats = segment.compute_region_stats(r, part)
    stop = seg_cfg.stop
    if stop.target_regions is not None and stop.target_regions > part.num_regions:
        stop = segment.StopCriterion(target_regions=part.num_regions)
    part = segment.hierarchical_merge(part, stats, stop)

    if cfg.order == "fuse-then-vote":
        final = fusion.vote(part, fused)
    else:
        final = majority_across_masks(
            [fusion.vote(part, m) for m in per_scale])

    rep = None
    if truth is not None:
        rep = metrics.report(metrics.confusion(final, truth))
    return PipelineResult(fused, patch_pred, part, final, rep)
