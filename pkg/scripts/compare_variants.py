#!/usr/bin/env python3
"""Reproduce the scale and feature-block comparison tables on the reference scene.

Trains one forest per variant and reports patch-level and voted scores:

  * multi-scale {56,112,224} vs each scale alone (all using the fused
    CH+GLCM+LBP descriptor), voted through the same segmentation;
  * each descriptor block alone vs their fusion at scale 56, patch level.

This is the run that froze the acceptance thresholds; it takes a couple of
minutes single-threaded.
"""

import sys
import time
from pathlib import Path

from landcover import fusion, metrics
from landcover.classify import classify_raster_per_scale, train_forest
from landcover.features import FeatureRecipe
from landcover.pipeline import build_training_set
from landcover.sampling import sample_centers
from landcover.segment import (
    StopCriterion,
    compute_region_stats,
    hierarchical_merge,
    initial_segmentation,
)
from landcover.synthgen import SceneSpec, generate

ROOT = Path(__file__).resolve().parent.parent

SCALES = (56, 112, 224)
PER_CLASS = 200
SEED = 7


def scores(pm, truth, partition):
    patch = fusion.rasterize(pm, truth.width, truth.height)
    voted = fusion.vote(partition, pm)
    return {
        "patch_oa": metrics.overall_accuracy(metrics.confusion(patch, truth)),
        "vote_oa": metrics.overall_accuracy(metrics.confusion(voted, truth)),
        "vote_kappa": metrics.kappa(metrics.confusion(voted, truth)),
    }


def run(r, truth, centers, recipe, scales, partition):
    ts = build_training_set(r, truth, centers, recipe, scales)
    model = train_forest(ts, rng_seed=SEED)
    maps = classify_raster_per_scale(r, model, recipe, scales)
    return scores(fusion.sum_scales(maps), truth, partition)


def main() -> int:
    t0 = time.monotonic()
    r, truth = generate(SceneSpec.from_json(ROOT / "scenes" / "reference.json"))
    centers = sample_centers(truth, PER_CLASS, SEED)
    part = initial_segmentation(r, 1000.0, 1.0, 100)
    part = hierarchical_merge(part, compute_region_stats(r, part),
                              StopCriterion(min_similarity=3.3))
    print(f"segmentation: {part.num_regions} regions")

    fused_recipe = FeatureRecipe()
    print("\nscale comparison (fused descriptor, voted):")
    row = run(r, truth, centers, fused_recipe, SCALES, part)
    print(f"  multi {SCALES}: {row}")
    for s in SCALES:
        print(f"  single {s}: {run(r, truth, centers, fused_recipe, (s,), part)}")

    print("\nfeature-block comparison (scale 56, patch level):")
    for blocks in (("ch",), ("glcm",), ("lbp",), ("ch", "glcm", "lbp")):
        row = run(r, truth, centers, FeatureRecipe(blocks=blocks), (56,), part)
        print(f"  {'+'.join(blocks)}: patch OA {row['patch_oa']:.4f}")

    print(f"\ntotal {time.monotonic() - t0:.0f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
