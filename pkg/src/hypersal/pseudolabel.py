"""Trinary pseudo-labels from point annotations and edge maps.

Edges from the false-color image and the spectral saliency map are
extracted at a reduced scale, summed, and binarized into barriers.
Unrestricted 4-connected flood fills from the annotated points then
carve the image into foreground / background / unknown; regions reached
by both fills are treated as ambiguous rather than resolved arbitrarily.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import PointOnEdgeError, ValidationError
from .io import _minmax_normalize, resize_bilinear, resize_nearest_labels
from .types import (
    BG,
    FG,
    UNKNOWN,
    BinaryEdgeMap,
    EdgeMap,
    PointSet,
    RGBImage,
    SaliencyMap,
    TriMask,
)

DEFAULT_SCALE = 0.5
DEFAULT_TAU = 0.5

# 4-connectivity: fills cannot slip diagonally through pixel-thin contours.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def gradient_edges(image: RGBImage | SaliencyMap) -> EdgeMap:
    """Sobel gradient magnitude, channel-max for RGB, min-max normalized."""
    data = image.data
    if data.ndim == 2:
        data = data[:, :, None]
    magnitudes = np.zeros(data.shape[:2], dtype=np.float64)
    for ch in range(data.shape[2]):
        band = data[:, :, ch]
        gx = ndimage.sobel(band, axis=1, mode="nearest")
        gy = ndimage.sobel(band, axis=0, mode="nearest")
        magnitudes = np.maximum(magnitudes, np.hypot(gx, gy))
    return EdgeMap(data=_minmax_normalize(magnitudes))


def merge_edges(e_i: EdgeMap, e_s: EdgeMap) -> EdgeMap:
    """Pixel-wise sum; values above 1 are legal before binarization."""
    if e_i.data.shape != e_s.data.shape:
        raise ValidationError(
            f"edge map shape mismatch: {e_i.data.shape} vs {e_s.data.shape}"
        )
    return EdgeMap(data=e_i.data + e_s.data)


def binarize_edges(edges: EdgeMap, tau: float) -> BinaryEdgeMap:
    """Barrier wherever edge strength >= tau."""
    if tau < 0:
        raise ValidationError("threshold must be non-negative")
    return BinaryEdgeMap(data=edges.data >= tau)


@dataclass(frozen=True)
class FillResult:
    """Flood-fill outcome plus the leak diagnostic used by the live UI."""

    mask: TriMask
    leaked: bool


def flood_fill_labels(edges: BinaryEdgeMap, points: PointSet) -> TriMask:
    return _flood_fill(edges, points).mask


def _flood_fill(edges: BinaryEdgeMap, points: PointSet) -> FillResult:
    h, w = edges.data.shape
    if points.frame != (h, w):
        raise ValidationError(
            f"points frame {points.frame} does not match barrier map {(h, w)}",
            kind="out-of-bounds",
        )
    for r, c in points.salient + (points.background,):
        if edges.data[r, c]:
            raise PointOnEdgeError(f"annotated point ({r}, {c}) sits on a barrier pixel")

    # Unrestricted fill from a seed == the seed's 4-connected component of
    # the barrier complement.
    components, _ = ndimage.label(~edges.data, structure=_CROSS)
    bg_comp = components[points.background]
    salient_comps = {int(components[r, c]) for r, c in points.salient}

    fg_reached = np.isin(components, sorted(salient_comps))
    bg_reached = components == bg_comp

    states = np.full((h, w), UNKNOWN, dtype=np.uint8)
    states[fg_reached & ~bg_reached] = FG
    states[bg_reached & ~fg_reached] = BG
    leaked = bg_comp in salient_comps
    return FillResult(mask=TriMask(data=states), leaked=leaked)


def _scaled_dim(dim: int, scale: float) -> int:
    return max(1, math.ceil(dim * scale))


def scale_points(points: PointSet, scale: float, frame: tuple[int, int]) -> PointSet:
    """Map annotations into the reduced frame by flooring coordinate * scale."""
    return PointSet(
        salient=tuple(
            (min(int(r * scale), frame[0] - 1), min(int(c * scale), frame[1] - 1))
            for r, c in points.salient
        ),
        background=(
            min(int(points.background[0] * scale), frame[0] - 1),
            min(int(points.background[1] * scale), frame[1] - 1),
        ),
        frame=frame,
    )


@dataclass(frozen=True)
class PseudoLabelResult:
    mask: TriMask
    leaked: bool
    merged_edges: EdgeMap


def generate_pseudo_label_full(
    falsecolor: RGBImage,
    specsal: SaliencyMap,
    points: PointSet,
    scale: float = DEFAULT_SCALE,
    tau: float = DEFAULT_TAU,
    edges_falsecolor: EdgeMap | None = None,
    edges_spectral: EdgeMap | None = None,
) -> PseudoLabelResult:
    """Full pipeline: rescale, extract + merge edges, binarize, fill, upsample.

    Precomputed edge maps (e.g. from a learned detector) substitute for the
    Sobel extraction; they are resampled to the working frame if needed.
    """
    if (falsecolor.height, falsecolor.width) != (specsal.height, specsal.width):
        raise ValidationError("false-color image and saliency map must share dims")
    if points.frame != (falsecolor.height, falsecolor.width):
        raise ValidationError(
            f"points frame {points.frame} does not match image "
            f"{(falsecolor.height, falsecolor.width)}",
            kind="out-of-bounds",
        )
    if scale <= 0:
        raise ValidationError("scale must be positive")

    full_h, full_w = falsecolor.height, falsecolor.width
    work_h, work_w = _scaled_dim(full_h, scale), _scaled_dim(full_w, scale)

    def to_work(edges: EdgeMap) -> EdgeMap:
        if edges.data.shape == (work_h, work_w):
            return edges
        resized = resize_bilinear(SaliencyMap(data=edges.data), work_h, work_w)
        return EdgeMap(data=resized.data)

    if edges_falsecolor is None:
        edges_falsecolor = gradient_edges(resize_bilinear(falsecolor, work_h, work_w))
    else:
        edges_falsecolor = to_work(edges_falsecolor)
    if edges_spectral is None:
        edges_spectral = gradient_edges(resize_bilinear(specsal, work_h, work_w))
    else:
        edges_spectral = to_work(edges_spectral)

    merged = merge_edges(edges_falsecolor, edges_spectral)
    barriers = binarize_edges(merged, tau)
    work_points = scale_points(points, scale, (work_h, work_w))
    filled = _flood_fill(barriers, work_points)
    mask = resize_nearest_labels(filled.mask, full_h, full_w)
    return PseudoLabelResult(mask=mask, leaked=filled.leaked, merged_edges=merged)


def generate_pseudo_label(
    falsecolor: RGBImage,
    specsal: SaliencyMap,
    points: PointSet,
    scale: float = DEFAULT_SCALE,
    tau: float = DEFAULT_TAU,
    edges_falsecolor: EdgeMap | None = None,
    edges_spectral: EdgeMap | None = None,
) -> TriMask:
    return generate_pseudo_label_full(
        falsecolor,
        specsal,
        points,
        scale=scale,
        tau=tau,
        edges_falsecolor=edges_falsecolor,
        edges_spectral=edges_spectral,
    ).mask
