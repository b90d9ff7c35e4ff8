"""Confusion-matrix accounting and OA / AA / kappa scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix, ExtentMismatch, PredictionContainsUnknown
from .raster import LabelMask


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows = ground truth, columns = prediction; unknown truth excluded."""

    counts: np.ndarray  # (C, C) int64

    def __post_init__(self):
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError("counts must be square")
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")
        self.counts.setflags(write=False)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]


def confusion(pred: LabelMask, truth: LabelMask) -> ConfusionMatrix:
    """Tally truth-by-prediction counts, skipping unknown (0) truth pixels."""
    if (pred.height, pred.width) != (truth.height, truth.width):
        raise ExtentMismatch(
            f"pred {pred.width}x{pred.height} vs truth {truth.width}x{truth.height}")
    c = max(pred.num_classes, truth.num_classes)
    valid = truth.labels > 0
    p = pred.labels[valid]
    if (p < 1).any():
        raise PredictionContainsUnknown("prediction contains label 0")
    t = truth.labels[valid]
    counts = np.bincount((t - 1) * c + (p - 1), minlength=c * c).reshape(c, c)
    return ConfusionMatrix(counts.astype(np.int64))


def overall_accuracy(cm: ConfusionMatrix) -> float:
    """Trace over total."""
    if cm.total == 0:
        raise EmptyMatrix("no evaluated pixels")
    return float(np.trace(cm.counts) / cm.total)


def per_class_recall(cm: ConfusionMatrix) -> np.ndarray:
    """Producer's accuracy per class; NaN where the class is absent from truth."""
    if cm.total == 0:
        raise EmptyMatrix("no evaluated pixels")
    row = cm.counts.sum(axis=1).astype(np.float64)
    with np.errstate(invalid="ignore"):
        return np.where(row > 0, np.diag(cm.counts) / row, np.nan)


def average_accuracy(cm: ConfusionMatrix) -> float:
    """Mean recall over classes present in the truth."""
    rec = per_class_recall(cm)
    return float(np.nanmean(rec))


def kappa(cm: ConfusionMatrix) -> float:
    """Cohen's chance-corrected agreement."""
    if cm.total == 0:
        raise EmptyMatrix("no evaluated pixels")
    total = cm.total
    p_o = np.trace(cm.counts) / total
    row = cm.counts.sum(axis=1)
    col = cm.counts.sum(axis=0)
    p_e = float((row * col).sum()) / (total * total)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def report(cm: ConfusionMatrix) -> dict:
    """JSON-ready summary of all scores."""
    rec = per_class_recall(cm)
    return {
        "oa": overall_accuracy(cm),
        "aa": average_accuracy(cm),
        "kappa": kappa(cm),
        "per_class_recall": [None if np.isnan(v) else float(v) for v in rec],
        "confusion": cm.counts.tolist(),
    }
