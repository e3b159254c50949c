"""Spectral saliency from Gaussian-pyramid center-surround spectral angles.

The cube is repeatedly blurred (fixed 5x5 binomial kernel, per band) and
decimated into a pyramid. Fine "center" layers are compared against
upsampled coarse "surround" layers through the per-pixel spectral angle;
the six center/surround distance maps are summed at full resolution and
min-max normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .io import _bilinear_array, _minmax_normalize
from .types import HyperCube, SaliencyMap

DEFAULT_LEVELS = 9
CENTER_SCALES = (2, 3, 4)
SURROUND_DELTAS = (3, 4)
# Deepest layer touched by the center/surround pairs above.
MIN_LEVELS = max(CENTER_SCALES) + max(SURROUND_DELTAS) + 1


def _binomial_vector() -> np.ndarray:
    return np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass(frozen=True)
class GaussianKernel:
    """Fixed separable 5x5 blur kernel: outer product of the binomial row."""

    g: np.ndarray = field(default_factory=_binomial_vector)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.float64)
        if g.shape != (5,):
            raise ValidationError("kernel row must have 5 taps")
        object.__setattr__(self, "g", g)

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.g, self.g)


@dataclass(frozen=True)
class Pyramid:
    """Gaussian pyramid; layer 0 is the input cube, each next layer ceil-halved."""

    layers: tuple[HyperCube, ...]

    @property
    def levels(self) -> int:
        return len(self.layers)


def gaussian_downsample(layer: HyperCube, kernel: GaussianKernel | None = None) -> HyperCube:
    """Blur each band with the 5x5 kernel (replicate padding), keep even rows/cols."""
    kernel = kernel or GaussianKernel()
    g2d = kernel.matrix[:, :, None]
    blurred = ndimage.convolve(layer.data, g2d, mode="nearest")
    return HyperCube(data=blurred[::2, ::2, :], wavelengths=layer.wavelengths)


def build_pyramid(cube: HyperCube, levels: int = DEFAULT_LEVELS) -> Pyramid:
    """Stack of `levels` cubes; dims shrink by ceil-halving, floored at 1 pixel."""
    if levels < 1:
        raise ValidationError("pyramid needs at least one layer")
    layers = [cube]
    for _ in range(levels - 1):
        layers.append(gaussian_downsample(layers[-1]))
    return Pyramid(layers=tuple(layers))


def spectral_angle_map(center: HyperCube, surround: HyperCube) -> SaliencyMap:
    """Per-pixel angle between the two spectra; zero-norm spectra give angle 0."""
    if center.data.shape != surround.data.shape:
        raise ValidationError(
            f"shape mismatch: center {center.data.shape} vs surround {surround.data.shape}"
        )
    dot = np.einsum("ijk,ijk->ij", center.data, surround.data)
    norm_c = np.linalg.norm(center.data, axis=2)
    norm_s = np.linalg.norm(surround.data, axis=2)
    denom = norm_c * norm_s
    valid = denom > 0.0
    cosine = np.ones_like(dot)
    np.divide(dot, denom, out=cosine, where=valid)
    angles = np.arccos(np.clip(cosine, -1.0, 1.0))
    angles[~valid] = 0.0
    return SaliencyMap(data=angles)


def center_surround_pairs() -> list[tuple[int, int]]:
    return [(c, c + d) for c in CENTER_SCALES for d in SURROUND_DELTAS]


def spectral_saliency(cube: HyperCube, levels: int = DEFAULT_LEVELS) -> SaliencyMap:
    """Sum of upsampled center-surround spectral angle maps, normalized to [0, 1]."""
    if levels < MIN_LEVELS:
        raise ValidationError(
            f"need at least {MIN_LEVELS} pyramid layers, got {levels}"
        )
    pyramid = build_pyramid(cube, levels)
    total = np.zeros((cube.height, cube.width), dtype=np.float64)
    for c, s in center_surround_pairs():
        center = pyramid.layers[c]
        surround = pyramid.layers[s]
        surround_up = HyperCube(
            data=_bilinear_array(surround.data, center.height, center.width),
            wavelengths=surround.wavelengths,
        )
        distance = spectral_angle_map(center, surround_up)
        total += _bilinear_array(distance.data, cube.height, cube.width)
    return SaliencyMap(data=_minmax_normalize(total))
