"""End-to-end per-image pipeline: saliency -> pseudo-label -> refinement
-> optional evaluation, plus a deterministic batch driver.

Without a trained detector the spectral saliency map stands in as the
prediction fed to the CRF stage; an externally produced prediction map
can be supplied instead.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .config import PipelineConfig
from .crf import CrfParams, refine_saliency
from .errors import MissingInputError
from .metrics import evaluate
from .pseudolabel import generate_pseudo_label_full
from .saliency import spectral_saliency
from .types import BinaryMask, SaliencyMap

THREADS_ENV = "HYPERSAL_THREADS"


def crf_params_from_config(config: PipelineConfig) -> CrfParams:
    return CrfParams(
        iterations=config.crf_iterations,
        w_spatial=config.crf_w_spatial,
        w_bilateral=config.crf_w_bilateral,
        theta_gamma=config.crf_theta_gamma,
        theta_alpha=config.crf_theta_alpha,
        theta_beta=config.crf_theta_beta,
        window_radius=config.crf_window_radius,
    )


def thread_cap(default: int = 4) -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def run_pipeline(
    config: PipelineConfig,
    cube_path: str | Path,
    points_path: str | Path,
    out_dir: str | Path,
    gt_path: str | Path | None = None,
    pred_path: str | Path | None = None,
) -> dict[str, str]:
    """Produce sal.pgm, label.pgm, refined.pgm (and metrics.json with a GT)."""
    cube_path = Path(cube_path)
    points_path = Path(points_path)
    if not points_path.exists():
        raise MissingInputError(f"points file not found: {points_path}")
    cube = io.read_cube(cube_path)
    points = io.read_points(points_path)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, str] = {}

    bands = config.bands or io.default_band_triple(cube.bands)
    falsecolor = io.false_color(cube, bands)
    specsal = spectral_saliency(cube, levels=config.levels)
    sal_path = out_dir / "sal.pgm"
    io.write_map_pgm(specsal, sal_path)
    artifacts["saliency"] = str(sal_path)

    label = generate_pseudo_label_full(
        falsecolor, specsal, points, scale=config.scale, tau=config.tau
    )
    label_path = out_dir / "label.pgm"
    io.write_trimask_pgm(label.mask, label_path)
    artifacts["label"] = str(label_path)

    pred = io.read_map_pgm(pred_path) if pred_path else specsal
    params = crf_params_from_config(config)
    refined = refine_saliency(
        pred, falsecolor, specsal, params, params, bin_tau=config.bin_tau
    )
    refined_map = SaliencyMap(data=refined.data.astype(np.float64))
    refined_path = out_dir / "refined.pgm"
    io.write_map_pgm(refined_map, refined_path)
    artifacts["refined"] = str(refined_path)

    if gt_path is not None:
        gt_map = io.read_map_pgm(gt_path)
        gt = BinaryMask(data=gt_map.data >= 0.5)
        report = {
            "saliency": evaluate(pred, gt, f_measure=config.f_measure).as_dict(),
            "refined": evaluate(refined_map, gt, f_measure=config.f_measure).as_dict(),
        }
        metrics_path = out_dir / "metrics.json"
        metrics_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        artifacts["metrics"] = str(metrics_path)

    return artifacts


def run_batch(
    config: PipelineConfig,
    cube_paths: list[Path],
    out_root: Path,
    points_suffix: str = ".points.json",
) -> dict[str, dict[str, str]]:
    """Process many cubes concurrently; outputs land in out_root/<stem>/.

    Each cube's annotation file is <stem><points_suffix> next to the header.
    Per-image work is independent, so results do not depend on the worker
    count (capped by the HYPERSAL_THREADS environment variable).
    """
    def one(cube_path: Path) -> tuple[str, dict[str, str]]:
        stem = cube_path.stem
        points_path = cube_path.with_name(stem + points_suffix)
        return stem, run_pipeline(config, cube_path, points_path, out_root / stem)

    results: dict[str, dict[str, str]] = {}
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        for stem, artifacts in pool.map(one, sorted(cube_paths)):
            results[stem] = artifacts
    return results
