"""Seeded synthetic land-cover scenes: Voronoi regions with per-class color,
sinusoidal texture, and Gaussian noise."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .raster import LabelMask, Raster


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    num_classes: int
    seeds_per_class: int
    band_means: tuple  # per class, one (b, g, r)-style triple in [0, 255]
    texture_freq: tuple  # cycles per pixel, per class
    texture_amp: tuple  # intensity units, per class
    noise_sigma: float
    rng_seed: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidSpec("dimensions must be >= 1")
        if self.num_classes < 2:
            raise InvalidSpec("need at least 2 classes")
        if self.seeds_per_class < 1:
            raise InvalidSpec("need at least 1 seed per class")
        if len(self.band_means) != self.num_classes:
            raise InvalidSpec("band_means must have one triple per class")
        if len(set(tuple(m) for m in self.band_means)) != self.num_classes:
            raise InvalidSpec("band-mean vectors must be pairwise distinct")
        if len(self.texture_freq) != self.num_classes \
                or len(self.texture_amp) != self.num_classes:
            raise InvalidSpec("texture parameters must have one entry per class")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be >= 0")

    @classmethod
    def from_json(cls, path) -> "SceneSpec":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, ValueError) as e:
            raise InvalidSpec(f"cannot read scene spec {path}: {e}") from e
        try:
            return cls(
                width=int(doc["width"]),
                height=int(doc["height"]),
                num_classes=int(doc["num_classes"]),
                seeds_per_class=int(doc["seeds_per_class"]),
                band_means=tuple(tuple(m) for m in doc["band_means"]),
                texture_freq=tuple(doc["texture_freq"]),
                texture_amp=tuple(doc["texture_amp"]),
                noise_sigma=float(doc["noise_sigma"]),
                rng_seed=int(doc["rng_seed"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidSpec(f"bad scene spec {path}: {e}") from e


def generate(spec: SceneSpec) -> tuple[Raster, LabelMask]:
    """Deterministic scene: Voronoi class regions, per-class texture + noise."""
    rng = np.random.default_rng(spec.rng_seed)
    n_sites = spec.num_classes * spec.seeds_per_class
    sx = rng.uniform(0, spec.width, size=n_sites)
    sy = rng.uniform(0, spec.height, size=n_sites)
    site_class = np.arange(n_sites) % spec.num_classes + 1  # round-robin

    xs = np.arange(spec.width, dtype=np.float64)
    ys = np.arange(spec.height, dtype=np.float64)
    # nearest site per pixel (squared Euclidean, first site wins ties)
    d2 = ((xs[None, :, None] - sx[None, None, :]) ** 2
          + (ys[:, None, None] - sy[None, None, :]) ** 2)
    labels = site_class[np.argmin(d2, axis=2)].astype(np.int32)

    h, w = spec.height, spec.width
    img = np.zeros((h, w, 3))
    gx, gy = np.meshgrid(xs, ys)
    for cls in range(1, spec.num_classes + 1):
        mask = labels == cls
        f = spec.texture_freq[cls - 1]
        a = spec.texture_amp[cls - 1]
        tex = 0.5 * a * (np.sin(2 * np.pi * f * gx) + np.sin(2 * np.pi * f * gy))
        for b in range(3):
            img[:, :, b][mask] = spec.band_means[cls - 1][b] + tex[mask]
    img += rng.normal(0.0, spec.noise_sigma, size=img.shape)
    img = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    return Raster(img), LabelMask(labels, spec.num_classes)
