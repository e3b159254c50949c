from __future__ import annotations

import base64
import json
import subprocess
import sys

import numpy as np
import pytest
from fastapi.testclient import TestClient

from hypersal import io
from hypersal.config import PipelineConfig
from hypersal.service import create_app, decode_rle, encode_rle
from hypersal.synthetic import overexposed_scene, square_scene
from hypersal.types import FG, TriMask


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("served")
    io.write_cube(square_scene().cube, root / "square.hdr")
    io.write_cube(overexposed_scene().cube, root / "overexposed.hdr")
    return root


@pytest.fixture(scope="module")
def client(data_dir):
    app = create_app(data_dir, config=PipelineConfig())
    with TestClient(app) as c:
        yield c


def _points_body(**extra):
    body = {
        "points": {
            "frame": [128, 128],
            "salient": [[64, 64]],
            "background": [5, 5],
        }
    }
    body.update(extra)
    return body


class TestRle:
    def test_round_trip(self, rng):
        mask = TriMask(data=rng.integers(0, 3, size=(9, 7)).astype(np.uint8))
        runs = encode_rle(mask)
        back = decode_rle(runs, 9, 7)
        np.testing.assert_array_equal(back.data, mask.data)

    def test_runs_are_compact(self):
        mask = TriMask(data=np.zeros((4, 4), dtype=np.uint8))
        assert encode_rle(mask) == [0, 16]


class TestScenes:
    def test_listing_sorted_with_dims(self, client):
        scenes = client.get("/api/scenes").json()
        assert [s["id"] for s in scenes] == ["overexposed", "square"]
        assert scenes[0] == {
            "id": "overexposed", "height": 128, "width": 128, "bands": 8,
        }

    def test_empty_dir(self, tmp_path):
        app = create_app(tmp_path)
        with TestClient(app) as c:
            assert c.get("/api/scenes").json() == []

    def test_unreadable_cube_omitted(self, tmp_path):
        io.write_cube(square_scene().cube, tmp_path / "good.hdr")
        (tmp_path / "broken.hdr").write_text(
            "samples = 4\nlines = 4\nbands = 2\ndata type = 4\ninterleave = bsq\n"
        )
        np.zeros(3, dtype="<f4").tofile(tmp_path / "broken.raw")
        app = create_app(tmp_path)
        with TestClient(app) as c:
            ids = [s["id"] for s in c.get("/api/scenes").json()]
        assert ids == ["good"]


class TestPreviews:
    @pytest.mark.parametrize("kind", ["falsecolor", "specsal", "edges"])
    def test_known_kinds_return_png(self, client, kind):
        resp = client.get(f"/api/scenes/square/{kind}.png")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        assert resp.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_unknown_scene_404(self, client):
        assert client.get("/api/scenes/nope/falsecolor.png").status_code == 404

    def test_unknown_kind_400(self, client):
        assert client.get("/api/scenes/square/depth.png").status_code == 400

    def test_edge_source_and_tau_params(self, client):
        ok = client.get("/api/scenes/square/edges.png?source=spectral&tau=0.5")
        assert ok.status_code == 200
        bad = client.get("/api/scenes/square/edges.png?source=laplacian")
        assert bad.status_code == 400


class TestProposeLabel:
    def test_square_scene_labels(self, client):
        resp = client.post("/api/scenes/square/label", json=_points_body())
        assert resp.status_code == 200
        body = resp.json()
        assert body["leak"] is False
        assert body["counts"]["fg"] > 0
        assert body["counts"]["bg"] > 0
        mask = decode_rle(body["rle"], body["height"], body["width"])
        assert (mask.data == FG).sum() == body["counts"]["fg"]

    def test_high_tau_on_overexposed_scene_leaks(self, client):
        resp = client.post(
            "/api/scenes/overexposed/label", json=_points_body(tau=0.99)
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["leak"] is True
        assert body["counts"]["fg"] == 0
        assert body["counts"]["unknown"] > body["counts"]["bg"]

    def test_overexposed_scene_works_at_default_tau(self, client):
        resp = client.post("/api/scenes/overexposed/label", json=_points_body())
        assert resp.status_code == 200
        body = resp.json()
        assert body["leak"] is False
        assert body["counts"]["fg"] > 0

    def test_point_on_barrier_is_400(self, client):
        # full-res (90, 64) floors to (45, 32) in the 64x64 working frame,
        # which sits on the square's bottom contour
        body = _points_body()
        body["points"]["salient"] = [[90, 64]]
        resp = client.post("/api/scenes/square/label", json=body)
        assert resp.status_code == 400
        assert resp.json()["detail"]["error"] == "point-on-edge"

    def test_out_of_frame_point_is_400(self, client):
        body = _points_body()
        body["points"]["salient"] = [[72, 130]]
        assert client.post("/api/scenes/square/label", json=body).status_code == 400

    def test_invalid_points_are_400(self, client):
        body = {"points": {"frame": [128, 128], "salient": [], "background": [5, 5]}}
        resp = client.post("/api/scenes/square/label", json=body)
        assert resp.status_code == 400

    def test_unknown_scene_404(self, client):
        assert client.post("/api/scenes/zzz/label", json=_points_body()).status_code == 404


class TestExport:
    def test_export_before_annotation_is_409(self, data_dir):
        app = create_app(data_dir)
        with TestClient(app) as c:
            assert c.get("/api/scenes/square/export").status_code == 409

    def test_export_unknown_scene_404(self, client):
        assert client.get("/api/scenes/missing/export").status_code == 404

    def test_export_round_trips_through_cli(self, client, data_dir, tmp_path):
        from hypersal.saliency import spectral_saliency
        from hypersal.types import SaliencyMap

        label = client.post("/api/scenes/square/label", json=_points_body()).json()
        export = client.get("/api/scenes/square/export").json()
        served_pgm = base64.b64decode(export["label_pgm"])

        points_path = tmp_path / "points.json"
        points_path.write_text(json.dumps(export["points"]))
        sal_path = tmp_path / "sal.pgm"
        fc_paths = []
        cube = io.read_cube(data_dir / "square.hdr")
        io.write_map_pgm(spectral_saliency(cube), sal_path)
        fc = io.false_color(cube, io.default_band_triple(cube.bands))
        for i, ch in enumerate("rgb"):
            p = tmp_path / f"fc.{ch}.pgm"
            io.write_map_pgm(SaliencyMap(data=fc.data[:, :, i]), p)
            fc_paths.append(str(p))

        out = tmp_path / "label.pgm"
        result = subprocess.run(
            [sys.executable, "-m", "hypersal.cli", "pseudolabel",
             "--falsecolor", *fc_paths, "--specsal", str(sal_path),
             "--points", str(points_path), "--output", str(out),
             "--scale", str(export["scale"]), "--tau", str(export["tau"])],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
        assert out.read_bytes() == served_pgm

        rle_mask = decode_rle(label["rle"], label["height"], label["width"])
        assert io.trimask_pgm_bytes(rle_mask) == served_pgm
