"""Core raster and annotation types shared across the toolkit.

Conventions used everywhere: coordinates are (row, col), zero-based,
row-major; image data is float64 in memory regardless of storage dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Tri-state label codes (TriMask.data values).
BG = 0
UNKNOWN = 1
FG = 2


def _require_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values", kind="non-finite")


@dataclass(frozen=True)
class HyperCube:
    """An H x W x D radiance cube. Values are unitless floats."""

    data: np.ndarray  # shape (H, W, D)
    wavelengths: tuple[float, ...] | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ValidationError("cube data must be 3-dimensional (H, W, D)")
        if data.shape[2] < 2:
            raise ValidationError(
                "cube needs at least 2 bands (spectral angle needs a vector)",
                kind="too-few-bands",
            )
        _require_finite(data, "cube")
        object.__setattr__(self, "data", data)
        if self.wavelengths is not None:
            wl = tuple(float(w) for w in self.wavelengths)
            if len(wl) != data.shape[2]:
                raise ValidationError("wavelength count must match band count")
            object.__setattr__(self, "wavelengths", wl)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class RGBImage:
    """An H x W x 3 image with values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValidationError("RGB image must have shape (H, W, 3)")
        _require_finite(data, "rgb image")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValidationError("RGB values must lie in [0, 1]", kind="out-of-range")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SaliencyMap:
    """An H x W scalar field. Normalizing operations produce values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValidationError("saliency map must be 2-dimensional")
        _require_finite(data, "saliency map")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class EdgeMap:
    """An H x W map of non-negative edge strengths."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValidationError("edge map must be 2-dimensional")
        _require_finite(data, "edge map")
        if data.min() < 0.0:
            raise ValidationError("edge strengths must be non-negative", kind="out-of-range")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class BinaryEdgeMap:
    """Boolean barrier mask: True pixels block flood fills."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.dtype != np.bool_:
            data = np.asarray(data, dtype=bool)
            if data.ndim != 2:
                raise ValidationError("barrier map must be 2-dimensional")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    """Boolean H x W mask (final refined saliency)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=bool)
        if data.ndim != 2:
            raise ValidationError("binary mask must be 2-dimensional")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class TriMask:
    """Three-state pseudo-label raster: values from {BG, UNKNOWN, FG}."""

    data: np.ndarray  # uint8, values in {0, 1, 2}

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.uint8)
        if data.ndim != 2:
            raise ValidationError("tri-mask must be 2-dimensional")
        if data.max(initial=0) > FG:
            raise ValidationError("tri-mask states must be BG, UNKNOWN or FG")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def counts(self) -> dict[str, int]:
        return {
            "fg": int(np.count_nonzero(self.data == FG)),
            "bg": int(np.count_nonzero(self.data == BG)),
            "unknown": int(np.count_nonzero(self.data == UNKNOWN)),
        }


@dataclass(frozen=True)
class PointSet:
    """Point annotations: one point per salient object plus one background point.

    Coordinates are (row, col) in the `frame` = (height, width) they were
    placed in.
    """

    salient: tuple[tuple[int, int], ...]
    background: tuple[int, int]
    frame: tuple[int, int]

    def __post_init__(self):
        salient = tuple((int(r), int(c)) for r, c in self.salient)
        background = (int(self.background[0]), int(self.background[1]))
        frame = (int(self.frame[0]), int(self.frame[1]))
        if frame[0] < 1 or frame[1] < 1:
            raise ValidationError("frame dimensions must be positive")
        if not salient:
            raise ValidationError(
                "at least one salient point is required", kind="empty-salient"
            )
        for r, c in salient + (background,):
            if not (0 <= r < frame[0] and 0 <= c < frame[1]):
                raise ValidationError(
                    f"point ({r}, {c}) outside frame {frame}", kind="out-of-bounds"
                )
        if background in salient:
            raise ValidationError(
                "background point coincides with a salient point",
                kind="background-on-salient",
            )
        object.__setattr__(self, "salient", salient)
        object.__setattr__(self, "background", background)
        object.__setattr__(self, "frame", frame)

    @property
    def count(self) -> int:
        return len(self.salient)


@dataclass(frozen=True)
class MetricsReport:
    """Scalar saliency-evaluation summary."""

    mae: float
    f_beta: float
    e_measure: float
    auc: float
    cc: float

    def as_dict(self) -> dict[str, float]:
        return {
            "mae": self.mae,
            "f_beta": self.f_beta,
            "e_measure": self.e_measure,
            "auc": self.auc,
            "cc": self.cc,
        }
