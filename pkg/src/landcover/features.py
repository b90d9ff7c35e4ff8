"""Classical per-patch descriptors: color histogram, GLCM stats, LBP, fusion."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePatch, PatchTooSmall
from .sampling import Patch

DEFAULT_CH_BINS = 32
DEFAULT_GLCM_LEVELS = 32
DEFAULT_GLCM_OFFSETS = ((0, 1), (1, 0), (1, 1), (1, -1))  # (dy, dx) at distance 1
LBP_BINS = 59


@dataclass(frozen=True)
class FeatureVector:
    """Flat descriptor with named (offset, length) block spans."""

    values: np.ndarray
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return len(self.values)

    def block(self, name: str) -> np.ndarray:
        off, length = self.blocks[name]
        return self.values[off:off + length]


def to_gray(p: Patch) -> np.ndarray:
    """Unweighted band mean, rounded floor(v + 0.5); uint8 output."""
    return np.floor(p.samples.mean(axis=2) + 0.5).astype(np.uint8)


def color_histogram(p: Patch, bins_per_band: int = DEFAULT_CH_BINS) -> FeatureVector:
    """Per-band equal-width histograms over [0, 256), L1-normalized per band."""
    if bins_per_band < 1:
        raise ValueError("bins_per_band must be >= 1")
    parts = []
    for b in range(p.bands):
        h = np.bincount(
            (p.samples[:, :, b].astype(np.int64).ravel() * bins_per_band) >> 8,
            minlength=bins_per_band,
        ).astype(np.float64)
        parts.append(h / h.sum())
    values = np.concatenate(parts)
    return FeatureVector(values, {"ch": (0, len(values))})


def _quantize_gray(gray: np.ndarray, levels: int) -> np.ndarray:
    return (gray.astype(np.int64) * levels) >> 8


def glcm_features(p: Patch, levels: int = DEFAULT_GLCM_LEVELS,
                  offsets=DEFAULT_GLCM_OFFSETS) -> FeatureVector:
    """Contrast, energy, homogeneity, correlation from symmetric GLCMs.

    The patch is gray-converted, quantized to `levels` equal-width bins,
    and each statistic is averaged over the offset set. Correlation is 0
    when either marginal sigma is 0.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    q = _quantize_gray(to_gray(p), levels)
    h, w = q.shape
    acc = np.zeros(4)
    idx = np.arange(levels, dtype=np.float64)
    for dy, dx in offsets:
        y0, y1 = max(0, -dy), min(h, h - dy)
        x0, x1 = max(0, -dx), min(w, w - dx)
        if y1 <= y0 or x1 <= x0:
            raise DegeneratePatch(f"no pixel pairs for offset ({dy},{dx})")
        a = q[y0:y1, x0:x1].ravel()
        b = q[y0 + dy:y1 + dy, x0 + dx:x1 + dx].ravel()
        counts = np.bincount(a * levels + b, minlength=levels * levels)
        P = counts.reshape(levels, levels).astype(np.float64)
        P = P + P.T
        P /= P.sum()
        pi = P.sum(axis=1)
        pj = P.sum(axis=0)
        diff = idx[:, None] - idx[None, :]
        contrast = float((diff ** 2 * P).sum())
        energy = float((P ** 2).sum())
        homogeneity = float((P / (1.0 + np.abs(diff))).sum())
        mu_i = float((idx * pi).sum())
        mu_j = float((idx * pj).sum())
        var_i = float(((idx - mu_i) ** 2 * pi).sum())
        var_j = float(((idx - mu_j) ** 2 * pj).sum())
        if var_i <= 0.0 or var_j <= 0.0:
            correlation = 0.0
        else:
            correlation = float(
                ((idx[:, None] - mu_i) * (idx[None, :] - mu_j) * P).sum()
                / np.sqrt(var_i * var_j)
            )
        acc += (contrast, energy, homogeneity, correlation)
    values = acc / len(offsets)
    return FeatureVector(values, {"glcm": (0, 4)})


def _uniform_lbp_table() -> np.ndarray:
    """code -> bin index; 58 uniform codes in ascending order, else bin 58."""
    table = np.full(256, LBP_BINS - 1, dtype=np.int64)
    nxt = 0
    for code in range(256):
        rotated = ((code << 1) | (code >> 7)) & 0xFF
        transitions = bin(code ^ rotated).count("1")
        if transitions <= 2:
            table[code] = nxt
            nxt += 1
    return table


_LBP_TABLE = _uniform_lbp_table()

# clockwise from top-left; neighbor i contributes bit (7 - i)
LBP_NEIGHBORS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def lbp_histogram(p: Patch) -> FeatureVector:
    """Uniform (8,1) LBP histogram over interior pixels, L1-normalized."""
    if p.height < 3 or p.width < 3:
        raise PatchTooSmall(f"{p.width}x{p.height} patch; need >= 3x3")
    gray = to_gray(p).astype(np.int64)
    center = gray[1:-1, 1:-1]
    codes = np.zeros_like(center)
    h, w = gray.shape
    for i, (dy, dx) in enumerate(LBP_NEIGHBORS):
        nb = gray[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        codes |= (nb >= center).astype(np.int64) << (7 - i)
    hist = np.bincount(_LBP_TABLE[codes].ravel(), minlength=LBP_BINS).astype(np.float64)
    hist /= hist.sum()
    return FeatureVector(hist, {"lbp": (0, LBP_BINS)})


@dataclass(frozen=True)
class FeatureRecipe:
    """Which descriptor blocks to compute and at what canonical patch size."""

    blocks: tuple = ("ch", "glcm", "lbp")
    canonical_size: int = 224
    ch_bins: int = DEFAULT_CH_BINS
    glcm_levels: int = DEFAULT_GLCM_LEVELS
    glcm_offsets: tuple = DEFAULT_GLCM_OFFSETS

    def __post_init__(self):
        bad = set(self.blocks) - {"ch", "glcm", "lbp"}
        if bad or not self.blocks:
            raise ValueError(f"unknown blocks {sorted(bad)}" if bad else "no blocks")

    def descriptors(self, p: Patch) -> dict:
        """Raw (un-fused) descriptor per block name."""
        out = {}
        if "ch" in self.blocks:
            out["ch"] = color_histogram(p, self.ch_bins)
        if "glcm" in self.blocks:
            out["glcm"] = glcm_features(p, self.glcm_levels, self.glcm_offsets)
        if "lbp" in self.blocks:
            out["lbp"] = lbp_histogram(p)
        return out

    def extract(self, p: Patch) -> FeatureVector:
        """Single block: the raw descriptor; several: normalized concatenation."""
        d = self.descriptors(p)
        if len(self.blocks) == 1:
            return d[self.blocks[0]]
        return fuse([d[name] for name in self.blocks])


def fuse(features) -> FeatureVector:
    """Normalized vector concatenation: each input scaled to unit L2 norm.

    All-zero inputs stay zero; the block table records provenance.
    """
    features = list(features)
    if not features:
        raise ValueError("need at least one feature vector")
    parts = []
    blocks = {}
    offset = 0
    for fv in features:
        v = fv.values.astype(np.float64)
        norm = np.linalg.norm(v)
        if norm > 0:
            v = v / norm
        for name, (off, length) in fv.blocks.items():
            blocks[name] = (offset + off, length)
        parts.append(v)
        offset += len(v)
    return FeatureVector(np.concatenate(parts), blocks)
