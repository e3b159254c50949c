"""Point-supervised salient object detection toolkit for hyperspectral images."""

from .types import (
    BG,
    FG,
    UNKNOWN,
    BinaryEdgeMap,
    BinaryMask,
    EdgeMap,
    HyperCube,
    MetricsReport,
    PointSet,
    RGBImage,
    SaliencyMap,
    TriMask,
)

__all__ = [
    "BG",
    "FG",
    "UNKNOWN",
    "BinaryEdgeMap",
    "BinaryMask",
    "EdgeMap",
    "HyperCube",
    "MetricsReport",
    "PointSet",
    "RGBImage",
    "SaliencyMap",
    "TriMask",
]

__version__ = "0.1.0"
