"""Command-line surface: synth, sample, train, classify, segment, vote,
evaluate, pipeline.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import fusion, metrics, pipeline, segment
from .classify import (
    classify_raster_per_scale,
    export_probabilities,
    import_probabilities,
    load_model,
    save_model,
    train_forest,
)
from .errors import ConfigError, InvalidSpec, LandcoverError
from .features import FeatureRecipe
from .raster import load_mask, load_raster, save_mask, save_raster
from .sampling import sample_centers
from .synthgen import SceneSpec, generate

USAGE_ERRORS = (ConfigError, InvalidSpec)


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_synth(args) -> int:
    spec = SceneSpec.from_json(args.spec)
    r, mask = generate(spec)
    os.makedirs(args.out, exist_ok=True)
    save_raster(r, os.path.join(args.out, "scene.tiff"))
    save_mask(mask, os.path.join(args.out, "truth.png"))
    if not args.quiet:
        print(f"wrote scene.tiff and truth.png to {args.out}")
    return 0


def cmd_sample(args) -> int:
    mask = load_mask(args.mask)
    centers = sample_centers(mask, args.per_class, args.seed)
    with open(args.out, "w") as fh:
        json.dump({"seed": args.seed, "per_class": args.per_class,
                   "centers": centers}, fh)
    if not args.quiet:
        print(f"wrote {len(centers)} centers to {args.out}")
    return 0


def _recipe(args) -> FeatureRecipe:
    return FeatureRecipe(blocks=tuple(args.blocks.split(",")))


def cmd_train(args) -> int:
    r = load_raster(args.raster)
    mask = load_mask(args.mask)
    recipe = _recipe(args)
    centers = sample_centers(mask, args.per_class, args.seed)
    ts = pipeline.build_training_set(r, mask, centers, recipe, args.scales)
    model = train_forest(ts, rng_seed=args.seed)
    save_model(model, args.out)
    if not args.quiet:
        print(f"trained on {len(ts.features)} patches -> {args.out}")
    return 0


def cmd_classify(args) -> int:
    r = load_raster(args.raster)
    model = load_model(args.model)
    recipe = _recipe(args)
    maps = classify_raster_per_scale(r, model, recipe, args.scales)
    fused = fusion.sum_scales(maps)
    export_probabilities(fused, args.out)
    if args.pred:
        save_mask(fusion.rasterize(fused, r.width, r.height), args.pred)
    if not args.quiet:
        print(f"wrote probability grid {fused.grid_w}x{fused.grid_h} to {args.out}")
    return 0


def cmd_segment(args) -> int:
    r = load_raster(args.raster)
    part = segment.initial_segmentation(r, args.k, args.sigma, args.min_size)
    stats = segment.compute_region_stats(r, part)
    if args.target_regions is not None:
        stop = segment.StopCriterion(target_regions=args.target_regions)
    else:
        stop = segment.StopCriterion(min_similarity=args.min_similarity)
    part = segment.hierarchical_merge(part, stats, stop)
    segment.save_region_map(part, args.out)
    if not args.quiet:
        print(f"wrote {part.num_regions} regions to {args.out}")
    return 0


def cmd_vote(args) -> int:
    part = segment.load_region_map(args.segments)
    pm = import_probabilities(args.probs, part.width, part.height)
    save_mask(fusion.vote(part, pm), args.out)
    if not args.quiet:
        print(f"wrote voted mask to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    from .errors import EmptyMatrix, ExtentMismatch, PredictionContainsUnknown

    pred = load_mask(args.pred)
    truth = load_mask(args.truth)
    try:
        rep = metrics.report(metrics.confusion(pred, truth))
    except (ExtentMismatch, PredictionContainsUnknown, EmptyMatrix) as e:
        return _fail(f"{type(e).__name__}: {e}", 2)
    print(json.dumps(rep, indent=2))
    return 0


PIPELINE_OUTPUTS = ("patch_pred.png", "segments.png", "final_pred.png",
                    "probabilities.pgrd", "probabilities.pgrd.json",
                    "metrics.json")


def cmd_pipeline(args) -> int:
    cfg = pipeline.load_config(args.config, seed_override=args.seed,
                               out_override=args.out)
    r = load_raster(cfg.raster_path)
    truth = load_mask(cfg.truth_path) if cfg.truth_path else None
    os.makedirs(cfg.out_dir, exist_ok=True)
    written = []
    try:
        result = pipeline.run_pipeline(cfg, r, truth)

        def out(name):
            path = os.path.join(cfg.out_dir, name)
            written.append(path)
            return path

        save_mask(result.patch_pred, out("patch_pred.png"))
        segment.save_region_map(result.partition, out("segments.png"))
        save_mask(result.final_pred, out("final_pred.png"))
        export_probabilities(result.fused_map, out("probabilities.pgrd"))
        written.append(os.path.join(cfg.out_dir, "probabilities.pgrd.json"))
        if result.report is not None:
            with open(out("metrics.json"), "w") as fh:
                json.dump(result.report, fh, indent=2)
    except Exception:
        for path in written:
            if os.path.exists(path):
                os.remove(path)
        raise
    if not args.quiet:
        print(f"pipeline outputs in {cfg.out_dir}")
        if result.report is not None:
            print(json.dumps({k: result.report[k] for k in ("oa", "aa", "kappa")}))
    return 0


def _scales(text: str):
    return tuple(int(s) for s in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="landcover",
                                 description="patch classification + "
                                 "segmentation voting pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="stratified training centers")
    p.add_argument("--mask", required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train the random forest")
    p.add_argument("--raster", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--scales", type=_scales, default=(56, 112, 224))
    p.add_argument("--blocks", default="ch,glcm,lbp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="patch-classify a raster")
    p.add_argument("--raster", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--scales", type=_scales, default=(56, 112, 224))
    p.add_argument("--blocks", default="ch,glcm,lbp")
    p.add_argument("--pred", help="also write the argmax mask PNG")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("segment", help="segment a raster")
    p.add_argument("--raster", required=True)
    p.add_argument("--k", type=float, default=500.0)
    p.add_argument("--sigma", type=float, default=0.8)
    p.add_argument("--min-size", type=int, default=64)
    p.add_argument("--target-regions", type=int)
    p.add_argument("--min-similarity", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("vote", help="majority-vote a probability grid over segments")
    p.add_argument("--segments", required=True)
    p.add_argument("--probs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("evaluate", help="OA/AA/kappa of a prediction")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run the full pipeline from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config rng_seed")
    p.add_argument("--out", help="override the config output directory")
    p.set_defaults(func=cmd_pipeline)

    for sp in sub.choices.values():
        sp.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as e:
        return _fail(str(e), 2)
    except LandcoverError as e:
        return _fail(str(e), 1)
    except OSError as e:
        return _fail(str(e), 1)


if __name__ == "__main__":
    sys.exit(main())
