"""Saliency evaluation: MAE, adaptive F-measure, enhanced-alignment
E-measure, ROC/AUC, and Pearson cross-correlation.

Conventions (deterministic and covered by tests): binarization uses the
>= rule; an empty ground truth or an empty binarized prediction yields
F = 0; a constant map yields CC = 0; a single-class ground truth yields
AUC = 0.5.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .types import BinaryMask, MetricsReport, SaliencyMap

BETA_SQ = 0.3
ROC_THRESHOLDS = 256


def _check_pair(pred: SaliencyMap, gt: BinaryMask) -> tuple[np.ndarray, np.ndarray]:
    if pred.data.shape != gt.data.shape:
        raise ValidationError(
            f"prediction {pred.data.shape} and ground truth {gt.data.shape} dims differ"
        )
    if pred.data.min() < 0.0 or pred.data.max() > 1.0:
        raise ValidationError("prediction values must lie in [0, 1]", kind="out-of-range")
    return pred.data.ravel(), gt.data.ravel()


def adaptive_threshold(pred: SaliencyMap) -> float:
    return min(2.0 * float(pred.data.mean()), 1.0)


def f_measure_at(pred_bin: np.ndarray, gt: np.ndarray, beta_sq: float = BETA_SQ) -> float:
    tp = float(np.count_nonzero(pred_bin & gt))
    fp = float(np.count_nonzero(pred_bin & ~gt))
    fn = float(np.count_nonzero(~pred_bin & gt))
    if tp + fp == 0.0 or tp + fn == 0.0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0.0:
        return 0.0
    return (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall)


def e_measure_at(pred_bin: np.ndarray, gt: np.ndarray) -> float:
    """Enhanced alignment between the bias-aligned binary maps.

    Where both deviation maps vanish the alignment is taken as perfect
    (identical constants), elsewhere a vanishing single side contributes
    the neutral value through the 0 numerator.
    """
    phi_gt = gt.astype(np.float64) - gt.mean()
    phi_pred = pred_bin.astype(np.float64) - pred_bin.mean()
    denom = phi_gt**2 + phi_pred**2
    align = np.ones_like(denom)
    np.divide(2.0 * phi_gt * phi_pred, denom, out=align, where=denom > 0)
    return float(np.mean((1.0 + align) ** 2 / 4.0))


def roc_curve(pred: SaliencyMap, gt: BinaryMask) -> list[tuple[float, float]]:
    """(FPR, TPR) at 256 thresholds descending from 1 to 0 inclusive."""
    p, g = _check_pair(pred, gt)
    pos = float(np.count_nonzero(g))
    neg = float(g.size - pos)
    points = []
    for t in np.linspace(1.0, 0.0, ROC_THRESHOLDS):
        pred_bin = p >= t
        tp = float(np.count_nonzero(pred_bin & g))
        fp = float(np.count_nonzero(pred_bin & ~g))
        tpr = tp / pos if pos > 0 else 0.0
        fpr = fp / neg if neg > 0 else 0.0
        points.append((fpr, tpr))
    return points


def auc_score(pred: SaliencyMap, gt: BinaryMask) -> float:
    g = gt.data.ravel()
    pos = np.count_nonzero(g)
    if pos == 0 or pos == g.size:
        return 0.5  # chance level: ROC is undefined with one class
    points = roc_curve(pred, gt)
    fpr = np.array([pt[0] for pt in points])
    tpr = np.array([pt[1] for pt in points])
    return float(np.trapezoid(tpr, fpr))


def pearson_cc(pred: SaliencyMap, gt: BinaryMask) -> float:
    p, g = _check_pair(pred, gt)
    g = g.astype(np.float64)
    pc = p - p.mean()
    gc = g - g.mean()
    denom = np.sqrt((pc**2).sum() * (gc**2).sum())
    if denom == 0.0:
        return 0.0
    return float((pc * gc).sum() / denom)


def max_f_measure(pred: SaliencyMap, gt: BinaryMask, beta_sq: float = BETA_SQ) -> float:
    """Best F over the same 256-threshold sweep used for the ROC."""
    p, g = _check_pair(pred, gt)
    g = g.astype(bool)
    return max(
        f_measure_at(p >= t, g, beta_sq) for t in np.linspace(1.0, 0.0, ROC_THRESHOLDS)
    )


def evaluate(
    pred: SaliencyMap, gt: BinaryMask, f_measure: str = "adaptive"
) -> MetricsReport:
    p, g = _check_pair(pred, gt)
    g = g.astype(bool)
    threshold = adaptive_threshold(pred)
    pred_bin = p >= threshold
    if f_measure == "adaptive":
        f_beta = f_measure_at(pred_bin, g)
    elif f_measure == "max":
        f_beta = max_f_measure(pred, gt)
    else:
        raise ValidationError(f"unknown f-measure mode {f_measure!r}")
    return MetricsReport(
        mae=float(np.mean(np.abs(p - g.astype(np.float64)))),
        f_beta=f_beta,
        e_measure=e_measure_at(pred_bin, g),
        auc=auc_score(pred, gt),
        cc=pearson_cc(pred, gt),
    )
