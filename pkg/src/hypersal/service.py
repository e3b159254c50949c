"""HTTP API behind the interactive annotation UI.

Scenes are cube headers discovered in a data directory. Derived layers
(false color, spectral saliency, edge maps) are computed lazily and
cached per scene under a lock; label computation itself is stateless —
the points arrive in the request body and the response carries the
run-length-encoded tri-mask, so the served mask is byte-identical to
what the CLI produces from the same inputs.
"""

from __future__ import annotations

import base64
import io as std_io
import logging
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from . import io
from .config import PipelineConfig
from .errors import HypersalError, InputError, PointOnEdgeError
from .pseudolabel import generate_pseudo_label_full, gradient_edges, merge_edges
from .saliency import spectral_saliency
from .types import EdgeMap, RGBImage, SaliencyMap, TriMask

logger = logging.getLogger("hypersal.service")

PREVIEW_KINDS = ("falsecolor", "specsal", "edges")
EDGE_SOURCES = ("merged", "falsecolor", "spectral")


def encode_rle(mask: TriMask) -> list[int]:
    """Row-major [value, run, value, run, ...] pairs over {0, 1, 2}."""
    flat = mask.data.ravel()
    if flat.size == 0:
        return []
    boundaries = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [flat.size]))
    out: list[int] = []
    for s, e in zip(starts, ends):
        out.extend((int(flat[s]), int(e - s)))
    return out


def decode_rle(runs: list[int], height: int, width: int) -> TriMask:
    values = np.zeros(height * width, dtype=np.uint8)
    pos = 0
    for value, run in zip(runs[::2], runs[1::2]):
        values[pos : pos + run] = value
        pos += run
    if pos != values.size:
        raise InputError("run-length data does not cover the mask")
    return TriMask(data=values.reshape(height, width))


class Scene:
    """Lazily derived layers for one cube; computation is locked so each
    layer is produced at most once."""

    def __init__(self, scene_id: str, header_path: Path, config: PipelineConfig):
        self.id = scene_id
        self.header_path = header_path
        self.config = config
        self._lock = threading.Lock()
        self._cube = None
        self._falsecolor = None
        self._specsal = None
        self._edges: dict[tuple, EdgeMap] = {}

    @property
    def cube(self):
        with self._lock:
            if self._cube is None:
                self._cube = io.read_cube(self.header_path)
            return self._cube

    @property
    def falsecolor(self) -> RGBImage:
        cube = self.cube
        with self._lock:
            if self._falsecolor is None:
                bands = self.config.bands or io.default_band_triple(cube.bands)
                rendered = io.false_color(cube, bands)
                # snap to the PGM grid so a label computed here is exactly
                # what the CLI computes from exported 16-bit files
                self._falsecolor = RGBImage(data=io.quantize_unit(rendered.data))
            return self._falsecolor

    @property
    def specsal(self) -> SaliencyMap:
        cube = self.cube
        with self._lock:
            if self._specsal is None:
                sal = spectral_saliency(cube, levels=self.config.levels)
                self._specsal = SaliencyMap(data=io.quantize_unit(sal.data))
            return self._specsal

    def edge_map(self, source: str, scale: float) -> EdgeMap:
        falsecolor, specsal = self.falsecolor, self.specsal
        key = (source, round(scale, 6))
        with self._lock:
            if key not in self._edges:
                h = max(1, int(np.ceil(falsecolor.height * scale)))
                w = max(1, int(np.ceil(falsecolor.width * scale)))
                e_i = gradient_edges(io.resize_bilinear(falsecolor, h, w))
                e_s = gradient_edges(io.resize_bilinear(specsal, h, w))
                self._edges[("falsecolor", key[1])] = e_i
                self._edges[("spectral", key[1])] = e_s
                self._edges[("merged", key[1])] = merge_edges(e_i, e_s)
            return self._edges[key]

    def summary(self) -> dict:
        cube = self.cube
        return {
            "id": self.id,
            "height": cube.height,
            "width": cube.width,
            "bands": cube.bands,
        }


def _to_png(array: np.ndarray) -> bytes:
    """8-bit PNG from a (H, W) or (H, W, 3) float array in [0, 1]."""
    from PIL import Image

    scaled = np.clip(array * 255.0 + 0.5, 0, 255).astype(np.uint8)
    mode = "L" if scaled.ndim == 2 else "RGB"
    buf = std_io.BytesIO()
    Image.fromarray(scaled, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def create_app(
    data_dir: Path, config: PipelineConfig | None = None, ui_dir: str | Path | None = None
) -> FastAPI:
    config = config or PipelineConfig()
    data_dir = Path(data_dir)
    app = FastAPI(title="hypersal annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    scenes: dict[str, Scene] = {}
    sessions: dict[str, dict] = {}
    sessions_lock = threading.Lock()

    def discover() -> dict[str, Scene]:
        for header in sorted(data_dir.glob("*.hdr")):
            sid = header.stem
            if sid not in scenes:
                scenes[sid] = Scene(sid, header, config)
        return scenes

    def get_scene(sid: str) -> Scene:
        discover()
        if sid not in scenes:
            raise HTTPException(status_code=404, detail=f"unknown scene {sid!r}")
        return scenes[sid]

    @app.get("/api/scenes")
    def list_scenes():
        summaries = []
        for sid in sorted(discover()):
            try:
                summaries.append(scenes[sid].summary())
            except HypersalError as exc:
                logger.warning("skipping unreadable scene %s: %s", sid, exc)
        return summaries

    @app.get("/api/scenes/{sid}/{kind}.png")
    def preview(sid: str, kind: str, request: Request):
        if kind not in PREVIEW_KINDS:
            raise HTTPException(status_code=400, detail=f"unknown layer kind {kind!r}")
        scene = get_scene(sid)
        try:
            if kind == "falsecolor":
                array = scene.falsecolor.data
            elif kind == "specsal":
                array = scene.specsal.data
            else:
                source = request.query_params.get("source", "merged")
                if source not in EDGE_SOURCES:
                    raise HTTPException(
                        status_code=400, detail=f"unknown edge source {source!r}"
                    )
                scale = float(request.query_params.get("scale", config.scale))
                edges = scene.edge_map(source, scale)
                tau = request.query_params.get("tau")
                if tau is not None:
                    array = (edges.data >= float(tau)).astype(np.float64)
                else:
                    peak = edges.data.max()
                    array = edges.data / peak if peak > 0 else edges.data
                full = io.resize_bilinear(
                    SaliencyMap(data=array), scene.cube.height, scene.cube.width
                )
                array = full.data
        except HypersalError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return Response(content=_to_png(array), media_type="image/png")

    @app.post("/api/scenes/{sid}/label")
    def propose_label(sid: str, body: dict):
        scene = get_scene(sid)
        try:
            points = io.points_from_dict(body.get("points", body))
            scale = float(body.get("scale", config.scale))
            tau = float(body.get("tau", config.tau))
            result = generate_pseudo_label_full(
                scene.falsecolor, scene.specsal, points, scale=scale, tau=tau
            )
        except PointOnEdgeError as exc:
            raise HTTPException(
                status_code=400, detail={"error": exc.kind, "message": str(exc)}
            ) from exc
        except InputError as exc:
            raise HTTPException(
                status_code=400, detail={"error": exc.kind, "message": str(exc)}
            ) from exc
        mask = result.mask
        with sessions_lock:
            sessions[sid] = {
                "points": points,
                "scale": scale,
                "tau": tau,
                "mask": mask,
            }
        return {
            "height": mask.height,
            "width": mask.width,
            "counts": mask.counts(),
            "leak": result.leaked,
            "rle": encode_rle(mask),
            "scale": scale,
            "tau": tau,
        }

    @app.get("/api/scenes/{sid}/export")
    def export(sid: str):
        get_scene(sid)
        with sessions_lock:
            session = sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=409, detail="no annotation to export yet")
        pgm_bytes = io.trimask_pgm_bytes(session["mask"])
        return {
            "points": io.points_to_dict(session["points"]),
            "scale": session["scale"],
            "tau": session["tau"],
            "label_pgm": base64.b64encode(pgm_bytes).decode("ascii"),
        }

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
