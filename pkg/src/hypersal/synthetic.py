"""Deterministic synthetic scenes for tests, demos and the annotation UI.

Two canonical 128x128, 8-band scenes:

* `square_scene` — a centered square whose spectrum differs from the
  background both in the preview bands and in overall shape, so its
  contour is visible in false color and in the spectral saliency map.
* `overexposed_scene` — the same geometry, but the object deviates only
  in bands outside the preview triple: the false-color rendering is
  completely flat (no usable edges), which is exactly the failure mode
  spectral edge refinement exists for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import BinaryMask, HyperCube, PointSet

FRAME = 128
BANDS = 8
SQUARE_SIDE = 56

BACKGROUND_SPECTRUM = np.array([0.80, 0.75, 0.70, 0.65, 0.60, 0.55, 0.50, 0.45])
SQUARE_SPECTRUM = np.array([0.20, 0.60, 0.30, 0.70, 0.25, 0.65, 0.35, 0.75])
# Deviates only in bands {1, 2, 3, 5, 6}; bands 0, 4, 7 (the default
# preview triple for 8 bands) match the background exactly.
OVEREXPOSED_SPECTRUM = np.array([0.80, 0.15, 0.95, 0.10, 0.60, 0.90, 0.12, 0.45])


@dataclass(frozen=True)
class SyntheticScene:
    cube: HyperCube
    ground_truth: BinaryMask
    points: PointSet


def _square_cube(
    object_spectrum: np.ndarray,
    side: int = SQUARE_SIDE,
    frame: int = FRAME,
    background: np.ndarray = BACKGROUND_SPECTRUM,
) -> SyntheticScene:
    data = np.empty((frame, frame, len(background)), dtype=np.float64)
    data[:] = background
    lo = (frame - side) // 2
    hi = lo + side
    data[lo:hi, lo:hi, :] = object_spectrum
    gt = np.zeros((frame, frame), dtype=bool)
    gt[lo:hi, lo:hi] = True
    center = (lo + side // 2, lo + side // 2)
    points = PointSet(salient=(center,), background=(5, 5), frame=(frame, frame))
    return SyntheticScene(
        cube=HyperCube(data=data), ground_truth=BinaryMask(data=gt), points=points
    )


def square_scene(side: int = SQUARE_SIDE, frame: int = FRAME) -> SyntheticScene:
    """Spectrally and chromatically distinct centered square."""
    return _square_cube(SQUARE_SPECTRUM, side=side, frame=frame)


def overexposed_scene(side: int = SQUARE_SIDE, frame: int = FRAME) -> SyntheticScene:
    """Square invisible in false color; only the spectrum betrays it."""
    return _square_cube(OVEREXPOSED_SPECTRUM, side=side, frame=frame)
