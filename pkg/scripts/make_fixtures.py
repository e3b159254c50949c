#!/usr/bin/env python3
"""Write the synthetic demo scenes to a data directory.

The output is a ready-to-serve dataset: cube headers for `hypersal serve
--data DIR`, point annotations for the CLI pipeline, plus binary ground
truth maps for evaluation.

Usage: python scripts/make_fixtures.py [outdir]   (default: ./fixtures)
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from hypersal import io
from hypersal.synthetic import overexposed_scene, square_scene
from hypersal.types import SaliencyMap


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("fixtures")
    out.mkdir(parents=True, exist_ok=True)
    for name, scene in (
        ("square", square_scene()),
        ("overexposed", overexposed_scene()),
    ):
        io.write_cube(scene.cube, out / f"{name}.hdr")
        io.write_points(scene.points, out / f"{name}.points.json")
        gt = SaliencyMap(data=scene.ground_truth.data.astype(np.float64))
        io.write_map_pgm(gt, out / f"{name}.gt.pgm")
        print(f"wrote {name}: {scene.cube.height}x{scene.cube.width}x{scene.cube.bands}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
