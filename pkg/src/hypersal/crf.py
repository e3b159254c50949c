"""Two-label dense-CRF mean-field refinement of saliency maps.

Unaries come from the predicted foreground probability; the pairwise
potential is a bilateral (position + guidance value) Gaussian plus a
spatial Gaussian, with Potts compatibility. Updates are synchronous, so
results are deterministic and independent of traversal order.

The exact formulation couples every pixel pair (O(N^2)); a truncated
square window is the production path and converges to the exact result
as the radius grows past the image diameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .types import BinaryMask, RGBImage, SaliencyMap

UNARY_EPS = 1e-6


@dataclass(frozen=True)
class CrfParams:
    iterations: int = 5
    w_spatial: float = 3.0
    w_bilateral: float = 4.0
    theta_gamma: float = 3.0
    theta_alpha: float = 30.0
    theta_beta: float = 0.05
    window_radius: int = 15  # 0 = exact dense coupling

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if min(self.theta_gamma, self.theta_alpha, self.theta_beta) <= 0:
            raise ValidationError("kernel stddevs must be positive")
        if min(self.w_spatial, self.w_bilateral) < 0:
            raise ValidationError("kernel weights must be non-negative")
        if self.window_radius < 0:
            raise ValidationError("window radius must be non-negative")


def _guidance_array(guidance) -> np.ndarray:
    if isinstance(guidance, RGBImage):
        return guidance.data
    if isinstance(guidance, SaliencyMap):
        return guidance.data[:, :, None]
    raise ValidationError(f"unsupported guidance type {type(guidance).__name__}")


def _dense_penalties(q_fg, q_bg, guide, params):
    """Exact O(N^2) message pass. Returns (pen_fg, pen_bg)."""
    h, w = q_fg.shape
    n = h * w
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    pos = np.stack([rows.ravel(), cols.ravel()], axis=1).astype(np.float64)
    pos_sq = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=2)
    vals = guide.reshape(n, -1)
    val_sq = ((vals[:, None, :] - vals[None, :, :]) ** 2).sum(axis=2)
    kernel = params.w_bilateral * np.exp(
        -pos_sq / (2 * params.theta_alpha**2) - val_sq / (2 * params.theta_beta**2)
    ) + params.w_spatial * np.exp(-pos_sq / (2 * params.theta_gamma**2))
    np.fill_diagonal(kernel, 0.0)
    # Potts: the penalty for taking a label is the kernel-weighted mass of
    # the opposite label among all other pixels.
    pen_fg = (kernel @ q_bg.ravel()).reshape(h, w)
    pen_bg = (kernel @ q_fg.ravel()).reshape(h, w)
    return pen_fg, pen_bg


def _window_offsets(radius: int):
    for di in range(-radius, radius + 1):
        for dj in range(-radius, radius + 1):
            if (di, dj) != (0, 0):
                yield di, dj


def _offset_slices(di: int, dj: int, h: int, w: int):
    """Slices (dst, src) so that dst = src shifted by (di, dj); None when
    the shift pushes the overlap off the image."""
    r0, r1 = max(0, -di), h - max(0, di)
    c0, c1 = max(0, -dj), w - max(0, dj)
    if r1 <= r0 or c1 <= c0:
        return None
    dst = (slice(r0, r1), slice(c0, c1))
    src = (slice(r0 + di, r1 + di), slice(c0 + dj, c1 + dj))
    return dst, src


def _windowed_penalties(q_fg, q_bg, guide, params):
    h, w = q_fg.shape
    pen_fg = np.zeros_like(q_fg)
    pen_bg = np.zeros_like(q_bg)
    for di, dj in _window_offsets(params.window_radius):
        slices = _offset_slices(di, dj, h, w)
        if slices is None:
            continue
        dst, src = slices
        dist_sq = float(di * di + dj * dj)
        val_sq = ((guide[dst] - guide[src]) ** 2).sum(axis=2)
        weight = params.w_bilateral * np.exp(
            -dist_sq / (2 * params.theta_alpha**2)
            - val_sq / (2 * params.theta_beta**2)
        ) + params.w_spatial * np.exp(-dist_sq / (2 * params.theta_gamma**2))
        pen_fg[dst] += weight * q_bg[src]
        pen_bg[dst] += weight * q_fg[src]
    return pen_fg, pen_bg


def mean_field_trace(
    prob: SaliencyMap, guidance, params: CrfParams
) -> list[np.ndarray]:
    """Run mean field and return the FG marginal after every iteration."""
    guide = _guidance_array(guidance)
    if guide.shape[:2] != prob.data.shape:
        raise ValidationError(
            f"guidance shape {guide.shape[:2]} does not match prediction "
            f"{prob.data.shape}"
        )
    if prob.data.min() < 0.0 or prob.data.max() > 1.0:
        raise ValidationError("probabilities must lie in [0, 1]", kind="out-of-range")

    p = np.clip(prob.data, UNARY_EPS, 1.0 - UNARY_EPS)
    q = 1.0 - p
    q_fg, q_bg = p.copy(), q.copy()
    trace = []
    penalties = _dense_penalties if params.window_radius == 0 else _windowed_penalties
    for _ in range(params.iterations):
        pen_fg, pen_bg = penalties(q_fg, q_bg, guide, params)
        # Stabilized softmax over {exp(log p - pen_fg), exp(log q - pen_bg)},
        # written multiplicatively so zero penalties reproduce p exactly.
        shift = np.minimum(pen_fg, pen_bg)
        num_fg = p * np.exp(shift - pen_fg)
        num_bg = q * np.exp(shift - pen_bg)
        total = num_fg + num_bg
        q_fg = num_fg / total
        q_bg = num_bg / total
        trace.append(q_fg.copy())
    return trace


def dense_crf_refine(prob: SaliencyMap, guidance, params: CrfParams) -> SaliencyMap:
    """Refined FG marginal map after `params.iterations` mean-field updates."""
    return SaliencyMap(data=mean_field_trace(prob, guidance, params)[-1])


def refine_saliency(
    pred: SaliencyMap,
    falsecolor: RGBImage,
    specsal: SaliencyMap,
    params_r: CrfParams,
    params_s: CrfParams,
    bin_tau: float = 0.5,
) -> BinaryMask:
    """Intersection of the two guided refinements, binarized at `bin_tau`."""
    shapes = {
        pred.data.shape,
        falsecolor.data.shape[:2],
        specsal.data.shape,
    }
    if len(shapes) != 1:
        raise ValidationError("prediction and guidance images must share dims")
    refined_rgb = dense_crf_refine(pred, falsecolor, params_r)
    refined_spec = dense_crf_refine(pred, specsal, params_s)
    mask = (refined_rgb.data >= bin_tau) & (refined_spec.data >= bin_tau)
    return BinaryMask(data=mask)
