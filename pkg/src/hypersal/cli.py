"""Command-line entry point.

Subcommands mirror the library stages: saliency, pseudolabel, refine,
loss, eval, toycheck, run (full pipeline), serve (annotation service).
Exit codes: 0 ok, 1 internal error, 2 input error; errors also emit a
machine-readable JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .attention import run_all_checks
from .config import PipelineConfig, format_config, load_config
from .crf import refine_saliency
from .errors import HypersalError, InputError, ValidationError
from .losses import CrfLossParams, total_loss
from .pipeline import crf_params_from_config, run_batch, run_pipeline
from .pseudolabel import generate_pseudo_label
from .saliency import spectral_saliency
from .types import EdgeMap, RGBImage, SaliencyMap


def _read_falsecolor(paths: list[str]) -> RGBImage:
    """One grayscale PGM (replicated) or a triplet of channel PGMs."""
    if len(paths) == 1:
        gray = io.read_map_pgm(paths[0]).data
        return RGBImage(data=np.stack([gray, gray, gray], axis=2))
    if len(paths) == 3:
        channels = [io.read_map_pgm(p).data for p in paths]
        if len({ch.shape for ch in channels}) != 1:
            raise ValidationError("false-color channel PGMs must share dims")
        return RGBImage(data=np.stack(channels, axis=2))
    raise ValidationError("--falsecolor takes one PGM or three channel PGMs")


def _config_from_args(args) -> PipelineConfig:
    config = PipelineConfig()
    if getattr(args, "config", None):
        config = load_config(args.config, base=config)
    overrides = {}
    for flag, key in (
        ("levels", "levels"), ("scale", "scale"), ("tau", "tau"),
        ("sigma_i", "sigma_i"), ("sigma_p", "sigma_p"),
        ("sigma_i2", "sigma_i2"), ("sigma_p2", "sigma_p2"), ("k", "k"),
        ("iters", "crf_iterations"), ("w_bilateral", "crf_w_bilateral"),
        ("w_spatial", "crf_w_spatial"), ("theta_alpha", "crf_theta_alpha"),
        ("theta_beta", "crf_theta_beta"), ("theta_gamma", "crf_theta_gamma"),
        ("window_radius", "crf_window_radius"), ("bin_tau", "bin_tau"),
        ("f_measure", "f_measure"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "bands", None):
        parts = [int(p) for p in args.bands.split(",")]
        if len(parts) != 3:
            raise ValidationError("--bands needs three comma-separated indices")
        overrides["bands"] = tuple(parts)
    import dataclasses

    return dataclasses.replace(config, **overrides)


def _cmd_saliency(args) -> int:
    config = _config_from_args(args)
    cube = io.read_cube(args.input)
    sal = spectral_saliency(cube, levels=config.levels)
    io.write_map_pgm(sal, args.output)
    return 0


def _cmd_pseudolabel(args) -> int:
    config = _config_from_args(args)
    falsecolor = _read_falsecolor(args.falsecolor)
    specsal = io.read_map_pgm(args.specsal)
    points = io.read_points(args.points)
    edges_i = EdgeMap(data=io.read_map_pgm(args.edges_i).data) if args.edges_i else None
    edges_s = EdgeMap(data=io.read_map_pgm(args.edges_s).data) if args.edges_s else None
    mask = generate_pseudo_label(
        falsecolor, specsal, points,
        scale=config.scale, tau=config.tau,
        edges_falsecolor=edges_i, edges_spectral=edges_s,
    )
    io.write_trimask_pgm(mask, args.output)
    return 0


def _cmd_refine(args) -> int:
    config = _config_from_args(args)
    pred = io.read_map_pgm(args.pred)
    falsecolor = _read_falsecolor(args.falsecolor)
    specsal = io.read_map_pgm(args.specsal)
    params = crf_params_from_config(config)
    mask = refine_saliency(
        pred, falsecolor, specsal, params, params, bin_tau=config.bin_tau
    )
    io.write_map_pgm(SaliencyMap(data=mask.data.astype(np.float64)), args.output)
    return 0


def _cmd_loss(args) -> int:
    config = _config_from_args(args)
    pred = io.read_map_pgm(args.pred)
    falsecolor = _read_falsecolor(args.falsecolor)
    specsal = io.read_map_pgm(args.specsal)
    label = io.read_trimask_pgm(args.label)
    edge_pred = io.read_map_pgm(args.edge_pred) if args.edge_pred else None
    edge_gt = EdgeMap(data=io.read_map_pgm(args.edge_gt).data) if args.edge_gt else None
    gate_ref = io.read_map_pgm(args.gate_ref) if args.gate_ref else None
    breakdown = total_loss(
        pred, falsecolor, specsal, label,
        edge_pred=edge_pred, edge_gt=edge_gt, gate_ref=gate_ref,
        p_rgb=CrfLossParams(sigma_p=config.sigma_p, sigma_i=config.sigma_i, k=config.k),
        p_spec=CrfLossParams(sigma_p=config.sigma_p2, sigma_i=config.sigma_i2, k=config.k),
    )
    print(json.dumps(breakdown.as_dict(), sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    config = _config_from_args(args)
    from .metrics import evaluate
    from .types import BinaryMask

    pred = io.read_map_pgm(args.pred)
    gt_map = io.read_map_pgm(args.gt)
    levels = np.unique(gt_map.data)
    if not np.all(np.isin(levels, (0.0, 1.0))):
        raise ValidationError("ground truth PGM must be binary (0 or 65535)")
    gt = BinaryMask(data=gt_map.data >= 0.5)
    report = evaluate(pred, gt, f_measure=config.f_measure)
    print(json.dumps(report.as_dict(), sort_keys=True))
    return 0


def _cmd_toycheck(args) -> int:
    report = run_all_checks(seed=args.seed)
    print(json.dumps(report, sort_keys=True))
    return 0 if report["all_pass"] else 1


def _cmd_run(args) -> int:
    import glob as globmod

    config = _config_from_args(args)
    if args.glob:
        cube_paths = sorted(Path(p) for p in globmod.glob(args.glob))
        if not cube_paths:
            raise InputError(f"no cubes match {args.glob!r}", kind="input-missing")
        run_batch(config, cube_paths, Path(args.out))
        return 0
    run_pipeline(
        config, args.cube, args.points, args.out,
        gt_path=args.gt, pred_path=args.pred,
    )
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _config_from_args(args)
    app = create_app(Path(args.data), config=config, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_config(args) -> int:
    print(format_config(_config_from_args(args)), end="")
    return 0


def _add_config_flags(sub, crf: bool = False, loss: bool = False):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--levels", type=int)
    sub.add_argument("--scale", type=float)
    sub.add_argument("--tau", type=float)
    sub.add_argument("--bands", help="three comma-separated band indices")
    sub.add_argument("--bin-tau", dest="bin_tau", type=float)
    sub.add_argument("--f-measure", dest="f_measure", choices=("adaptive", "max"))
    if crf:
        sub.add_argument("--iters", type=int)
        sub.add_argument("--w-bilateral", dest="w_bilateral", type=float)
        sub.add_argument("--w-spatial", dest="w_spatial", type=float)
        sub.add_argument("--theta-alpha", dest="theta_alpha", type=float)
        sub.add_argument("--theta-beta", dest="theta_beta", type=float)
        sub.add_argument("--theta-gamma", dest="theta_gamma", type=float)
        sub.add_argument("--window-radius", dest="window_radius", type=int)
    if loss:
        sub.add_argument("--sigma-i", dest="sigma_i", type=float)
        sub.add_argument("--sigma-p", dest="sigma_p", type=float)
        sub.add_argument("--sigma-i2", dest="sigma_i2", type=float)
        sub.add_argument("--sigma-p2", dest="sigma_p2", type=float)
        sub.add_argument("--k", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypersal",
        description="Point-supervised hyperspectral salient object detection toolkit",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("saliency", help="compute the spectral saliency map")
    p.add_argument("--input", required=True, help="cube header (.hdr)")
    p.add_argument("--output", required=True, help="output 16-bit PGM")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_saliency)

    p = subs.add_parser("pseudolabel", help="generate a trinary pseudo-label")
    p.add_argument("--falsecolor", required=True, nargs="+",
                   help="one PGM or three channel PGMs")
    p.add_argument("--specsal", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--edges-i", dest="edges_i", help="precomputed false-color edges")
    p.add_argument("--edges-s", dest="edges_s", help="precomputed spectral edges")
    p.add_argument("--output", required=True)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_pseudolabel)

    p = subs.add_parser("refine", help="dense-CRF refinement with intersection")
    p.add_argument("--pred", required=True)
    p.add_argument("--falsecolor", required=True, nargs="+")
    p.add_argument("--specsal", required=True)
    p.add_argument("--output", required=True)
    _add_config_flags(p, crf=True)
    p.set_defaults(func=_cmd_refine)

    p = subs.add_parser("loss", help="training-objective breakdown as JSON")
    p.add_argument("--pred", required=True)
    p.add_argument("--falsecolor", required=True, nargs="+")
    p.add_argument("--specsal", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--edge-pred", dest="edge_pred")
    p.add_argument("--edge-gt", dest="edge_gt")
    p.add_argument("--gate-ref", dest="gate_ref")
    _add_config_flags(p, loss=True)
    p.set_defaults(func=_cmd_loss)

    p = subs.add_parser("eval", help="saliency metrics against a binary GT")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--json", action="store_true", help="(default) JSON output")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("toycheck", help="gradient and invariant checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_toycheck)

    p = subs.add_parser("run", help="full pipeline on one cube or a glob")
    p.add_argument("--cube", help="cube header (.hdr)")
    p.add_argument("--points", help="points JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--gt", help="binary ground-truth PGM (enables metrics.json)")
    p.add_argument("--pred", help="external prediction PGM (else spectral saliency)")
    p.add_argument("--glob", help="batch mode: glob of cube headers")
    _add_config_flags(p, crf=True)
    p.set_defaults(func=_cmd_run)

    p = subs.add_parser("serve", help="annotation service with browser UI")
    p.add_argument("--data", required=True, help="directory of cube headers")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--ui", help="directory of built UI assets")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_serve)

    p = subs.add_parser("config", help="print the effective configuration")
    _add_config_flags(p, crf=True, loss=True)
    p.set_defaults(func=_cmd_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run" and not args.glob:
            if not args.cube or not args.points:
                raise InputError("run needs --cube and --points (or --glob)")
        return args.func(args)
    except InputError as exc:
        json.dump({"error": exc.kind, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except HypersalError as exc:
        json.dump({"error": exc.kind, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except Exception as exc:  # noqa: BLE001 - surface as machine-readable
        json.dump({"error": "internal", "message": f"{type(exc).__name__}: {exc}"}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
