"""Training-objective numerics: pairwise-smoothness CRF loss, hybrid variant,
partial BCE over definite pseudo-label pixels, plain BCE, and the total.

All losses are means over pixels so the stated stddev defaults are
resolution-independent. Each loss ships an analytic gradient with respect
to the prediction; the test suite checks them against central finite
differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .types import UNKNOWN, FG, EdgeMap, RGBImage, SaliencyMap, TriMask

PROB_EPS = 1e-7

# Defaults: (spatial stddev, value stddev) for the false-color and the
# spectral-saliency guidance respectively.
DEFAULT_SIGMA_I = 0.03
DEFAULT_SIGMA_P = 5.0
DEFAULT_SIGMA_I2 = 3.0
DEFAULT_SIGMA_P2 = 0.003


@dataclass(frozen=True)
class CrfLossParams:
    sigma_p: float
    sigma_i: float
    k: int = 5

    def __post_init__(self):
        if self.sigma_p <= 0 or self.sigma_i <= 0:
            raise ValidationError("stddevs must be positive")
        if self.k < 1 or self.k % 2 == 0:
            raise ValidationError("neighborhood side k must be odd and >= 1")


def falsecolor_loss_params(k: int = 5) -> CrfLossParams:
    return CrfLossParams(sigma_p=DEFAULT_SIGMA_P, sigma_i=DEFAULT_SIGMA_I, k=k)


def spectral_loss_params(k: int = 5) -> CrfLossParams:
    return CrfLossParams(sigma_p=DEFAULT_SIGMA_P2, sigma_i=DEFAULT_SIGMA_I2, k=k)


def _guidance_channels(guidance) -> np.ndarray:
    if isinstance(guidance, RGBImage):
        return guidance.data
    if isinstance(guidance, (SaliencyMap, EdgeMap)):
        return guidance.data[:, :, None]
    raise ValidationError(f"unsupported guidance type {type(guidance).__name__}")


def _neighbor_offsets(k: int) -> list[tuple[int, int]]:
    half = k // 2
    return [
        (di, dj)
        for di in range(-half, half + 1)
        for dj in range(-half, half + 1)
        if (di, dj) != (0, 0)
    ]


def _offset_slices(di: int, dj: int, h: int, w: int):
    """Slices (dst, src) with dst = src shifted by (di, dj); None if empty."""
    r0, r1 = max(0, -di), h - max(0, di)
    c0, c1 = max(0, -dj), w - max(0, dj)
    if r1 <= r0 or c1 <= c0:
        return None
    return (slice(r0, r1), slice(c0, c1)), (slice(r0 + di, r1 + di), slice(c0 + dj, c1 + dj))


def crf_kernel_weights(guidance, params: CrfLossParams):
    """Per-center normalized pair weights.

    Returns (offsets, weights) where weights[o, i] is the normalized weight
    between center pixel i and its neighbor at offsets[o]; out-of-bounds
    pairs are 0. Normalization is a log-sum-exp over each center's in-bounds
    neighbors, which stays well-defined even when the raw Gaussian terms
    underflow (tiny stddevs simply concentrate the mass on the nearest,
    most similar neighbors).
    """
    guide = _guidance_channels(guidance)
    h, w = guide.shape[:2]
    offsets = _neighbor_offsets(params.k)
    if not offsets:
        return offsets, np.zeros((0, h, w))
    exponents = np.full((len(offsets), h, w), -np.inf)
    for idx, (di, dj) in enumerate(offsets):
        slices = _offset_slices(di, dj, h, w)
        if slices is None:
            continue
        dst, src = slices
        val_sq = ((guide[dst] - guide[src]) ** 2).sum(axis=2)
        dist_sq = float(di * di + dj * dj)
        exponents[idx][dst] = -dist_sq / (2 * params.sigma_p**2) - val_sq / (
            2 * params.sigma_i**2
        )
    peak = exponents.max(axis=0)
    has_neighbor = np.isfinite(peak)
    peak = np.where(has_neighbor, peak, 0.0)
    shifted = np.exp(exponents - peak, where=np.isfinite(exponents), out=np.zeros_like(exponents))
    norm = shifted.sum(axis=0)
    weights = np.divide(
        shifted, norm, out=np.zeros_like(shifted), where=norm > 0
    )
    return offsets, weights


def crf_loss(pred: SaliencyMap, guidance, params: CrfLossParams) -> float:
    """Mean over pixels of the weighted absolute prediction differences
    within each k x k neighborhood (self excluded)."""
    guide_shape = _guidance_channels(guidance).shape[:2]
    if pred.data.shape != guide_shape:
        raise ValidationError(
            f"prediction {pred.data.shape} and guidance {guide_shape} dims differ"
        )
    offsets, weights = crf_kernel_weights(guidance, params)
    if not offsets:
        return 0.0
    h, w = pred.data.shape
    total = 0.0
    for idx, (di, dj) in enumerate(offsets):
        slices = _offset_slices(di, dj, h, w)
        if slices is None:
            continue
        dst, src = slices
        diffs = np.abs(pred.data[dst] - pred.data[src])
        total += float((diffs * weights[idx][dst]).sum())
    return total / (h * w)


def crf_loss_grad(pred: SaliencyMap, guidance, params: CrfLossParams) -> np.ndarray:
    """d crf_loss / d pred. At |p_i - p_j| = 0 the subgradient 0 is used."""
    offsets, weights = crf_kernel_weights(guidance, params)
    h, w = pred.data.shape
    grad = np.zeros_like(pred.data)
    for idx, (di, dj) in enumerate(offsets):
        slices = _offset_slices(di, dj, h, w)
        if slices is None:
            continue
        dst, src = slices
        signs = np.sign(pred.data[dst] - pred.data[src])
        contrib = signs * weights[idx][dst]
        # Center side of each pair, then the neighbor side (weight is not
        # symmetric: normalization is per center).
        grad[dst] += contrib
        grad[src] -= contrib
    return grad / (h * w)


def hybrid_crf_loss(
    pred: SaliencyMap,
    falsecolor: RGBImage,
    specsal: SaliencyMap,
    p_rgb: CrfLossParams | None = None,
    p_spec: CrfLossParams | None = None,
    w_rgb: float = 1.0,
    w_spec: float = 1.0,
) -> float:
    """Sum of the CRF losses under the two guidance images.

    The per-term weights default to 1 (the plain sum); setting one to 0
    reproduces the single-guidance ablation.
    """
    p_rgb = p_rgb or falsecolor_loss_params()
    p_spec = p_spec or spectral_loss_params()
    total = 0.0
    if w_rgb != 0.0:
        total += w_rgb * crf_loss(pred, falsecolor, p_rgb)
    if w_spec != 0.0:
        total += w_spec * crf_loss(pred, specsal, p_spec)
    return total


def _clamped(pred: np.ndarray) -> np.ndarray:
    return np.clip(pred, PROB_EPS, 1.0 - PROB_EPS)


def partial_bce(pred: SaliencyMap, label: TriMask) -> float:
    """BCE averaged over definite (FG/BG) pixels only; 0 if none exist."""
    if pred.data.shape != label.data.shape:
        raise ValidationError("prediction and label dims differ")
    definite = label.data != UNKNOWN
    if not definite.any():
        return 0.0
    y = (label.data[definite] == FG).astype(np.float64)
    p = _clamped(pred.data[definite])
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def partial_bce_grad(pred: SaliencyMap, label: TriMask) -> np.ndarray:
    definite = label.data != UNKNOWN
    grad = np.zeros_like(pred.data)
    n = int(definite.sum())
    if n == 0:
        return grad
    y = (label.data == FG).astype(np.float64)
    p = _clamped(pred.data)
    inside = definite & (pred.data > PROB_EPS) & (pred.data < 1.0 - PROB_EPS)
    grad[inside] = (p[inside] - y[inside]) / (p[inside] * (1.0 - p[inside])) / n
    return grad


def bce(pred: SaliencyMap, target: SaliencyMap) -> float:
    """Mean binary cross-entropy of `pred` against targets in [0, 1]."""
    if pred.data.shape != target.data.shape:
        raise ValidationError("prediction and target dims differ")
    y = target.data
    p = _clamped(pred.data)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def bce_grad(pred: SaliencyMap, target: SaliencyMap) -> np.ndarray:
    y = target.data
    p = _clamped(pred.data)
    grad = np.zeros_like(pred.data)
    inside = (pred.data > PROB_EPS) & (pred.data < 1.0 - PROB_EPS)
    grad[inside] = (p[inside] - y[inside]) / (p[inside] * (1.0 - p[inside]))
    return grad / pred.data.size


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    hybrid_crf: float
    partial_bce: float
    bce_edges: float
    bce_gate: float

    @property
    def bce(self) -> float:
        return self.bce_edges + self.bce_gate

    def as_dict(self) -> dict[str, float]:
        return {
            "total": self.total,
            "hybrid_crf": self.hybrid_crf,
            "partial_bce": self.partial_bce,
            "bce_edges": self.bce_edges,
            "bce_gate": self.bce_gate,
        }


def total_loss(
    pred: SaliencyMap,
    falsecolor: RGBImage,
    specsal: SaliencyMap,
    label: TriMask,
    edge_pred: SaliencyMap | None = None,
    edge_gt: EdgeMap | None = None,
    gate_ref: SaliencyMap | None = None,
    p_rgb: CrfLossParams | None = None,
    p_spec: CrfLossParams | None = None,
    w_rgb: float = 1.0,
    w_spec: float = 1.0,
) -> LossBreakdown:
    """Hybrid CRF + partial BCE + the two auxiliary BCE terms.

    The edge term compares the predicted edge map against the merged edge
    map (clipped into [0, 1]); the gate term supervises the gate refinement
    map with the pseudo-label over definite pixels. Either auxiliary pair
    may be omitted, in which case its term is 0.
    """
    hybrid = hybrid_crf_loss(pred, falsecolor, specsal, p_rgb, p_spec, w_rgb, w_spec)
    pbce = partial_bce(pred, label)
    edge_term = 0.0
    if edge_pred is not None and edge_gt is not None:
        edge_target = SaliencyMap(data=np.clip(edge_gt.data, 0.0, 1.0))
        edge_term = bce(edge_pred, edge_target)
    gate_term = 0.0
    if gate_ref is not None:
        gate_term = partial_bce(gate_ref, label)
    return LossBreakdown(
        total=hybrid + pbce + edge_term + gate_term,
        hybrid_crf=hybrid,
        partial_bce=pbce,
        bce_edges=edge_term,
        bce_gate=gate_term,
    )
