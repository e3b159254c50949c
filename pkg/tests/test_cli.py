from __future__ import annotations

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from hypersal import io
from hypersal.cli import main
from hypersal.config import PipelineConfig, format_config, parse_config
from hypersal.synthetic import square_scene
from hypersal.types import SaliencyMap


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenes")
    scene = square_scene()
    io.write_cube(scene.cube, root / "square.hdr")
    io.write_points(scene.points, root / "square.points.json")
    io.write_map_pgm(
        SaliencyMap(data=scene.ground_truth.data.astype(np.float64)),
        root / "square.gt.pgm",
    )
    return root


def _run_cli(args, **kwargs):
    return subprocess.run(
        [sys.executable, "-m", "hypersal.cli", *args],
        capture_output=True, text=True, **kwargs,
    )


class TestConfig:
    def test_round_trip(self):
        config = PipelineConfig(levels=9, scale=0.25, tau=0.75, bands=(7, 3, 1))
        assert parse_config(format_config(config)) == config

    def test_defaults_round_trip(self):
        config = PipelineConfig()
        assert parse_config(format_config(config)) == config

    def test_stated_hyperparameter_defaults(self):
        config = PipelineConfig()
        assert (config.sigma_i, config.sigma_p) == (0.03, 5.0)
        assert (config.sigma_i2, config.sigma_p2) == (3.0, 0.003)
        assert config.levels == 9
        assert config.scale == 0.5
        assert config.k == 5

    def test_unknown_key_rejected(self):
        from hypersal.errors import FormatError

        with pytest.raises(FormatError):
            parse_config("no_such_key = 3\n")

    def test_comments_and_blank_lines(self):
        config = parse_config("# comment\n\nlevels = 9\nscale = 0.5  # inline\n")
        assert config == PipelineConfig()


class TestPipelineCommand:
    def test_artifacts_produced(self, scene_dir, tmp_path):
        out = tmp_path / "out"
        code = main([
            "run", "--cube", str(scene_dir / "square.hdr"),
            "--points", str(scene_dir / "square.points.json"),
            "--gt", str(scene_dir / "square.gt.pgm"),
            "--out", str(out),
        ])
        assert code == 0
        for name in ("sal.pgm", "label.pgm", "refined.pgm", "metrics.json"):
            assert (out / name).exists(), name
        metrics = json.loads((out / "metrics.json").read_text())
        assert set(metrics) == {"saliency", "refined"}
        assert 0.0 <= metrics["refined"]["f_beta"] <= 1.0

    def test_missing_points_maps_to_exit_2(self, scene_dir, tmp_path):
        result = _run_cli([
            "run", "--cube", str(scene_dir / "square.hdr"),
            "--points", str(scene_dir / "absent.json"),
            "--out", str(tmp_path / "out"),
        ])
        assert result.returncode == 2
        err = json.loads(result.stderr.strip())
        assert err["error"] == "input-missing"

    def test_rerun_is_byte_identical(self, scene_dir, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main([
                "run", "--cube", str(scene_dir / "square.hdr"),
                "--points", str(scene_dir / "square.points.json"),
                "--gt", str(scene_dir / "square.gt.pgm"),
                "--out", str(out),
            ]) == 0
            outs.append({
                p.name: p.read_bytes() for p in sorted(out.iterdir())
            })
        assert outs[0] == outs[1]

    def test_thread_count_does_not_change_outputs(self, scene_dir, tmp_path):
        blobs = {}
        for threads in ("1", "8"):
            out = tmp_path / f"t{threads}"
            env = dict(os.environ, HYPERSAL_THREADS=threads)
            result = _run_cli([
                "run", "--glob", str(scene_dir / "*.hdr"),
                "--out", str(out),
            ], env=env)
            assert result.returncode == 0, result.stderr
            blobs[threads] = {
                str(p.relative_to(out)): p.read_bytes()
                for p in sorted(out.rglob("*")) if p.is_file()
            }
        assert blobs["1"] == blobs["8"]


class TestStageCommands:
    def test_saliency_pseudolabel_eval_chain(self, scene_dir, tmp_path):
        sal = tmp_path / "sal.pgm"
        assert main([
            "saliency", "--input", str(scene_dir / "square.hdr"),
            "--output", str(sal),
        ]) == 0

        # false-color triplet from the cube for the pseudolabel stage
        cube = io.read_cube(scene_dir / "square.hdr")
        fc = io.false_color(cube, io.default_band_triple(cube.bands))
        fc_paths = []
        for i, ch in enumerate("rgb"):
            path = tmp_path / f"fc.{ch}.pgm"
            io.write_map_pgm(SaliencyMap(data=fc.data[:, :, i]), path)
            fc_paths.append(str(path))

        label = tmp_path / "label.pgm"
        assert main([
            "pseudolabel", "--falsecolor", *fc_paths,
            "--specsal", str(sal),
            "--points", str(scene_dir / "square.points.json"),
            "--output", str(label),
        ]) == 0
        mask = io.read_trimask_pgm(label)
        assert (mask.data == 2).sum() > 0

        result = _run_cli([
            "eval", "--pred", str(sal), "--gt", str(scene_dir / "square.gt.pgm"),
            "--json",
        ])
        assert result.returncode == 0
        report = json.loads(result.stdout)
        assert set(report) == {"mae", "f_beta", "e_measure", "auc", "cc"}

    def test_toycheck_passes(self):
        result = _run_cli(["toycheck", "--seed", "0"])
        assert result.returncode == 0
        report = json.loads(result.stdout)
        assert report["all_pass"]

    def test_loss_breakdown_json(self, scene_dir, tmp_path):
        rng = np.random.default_rng(5)
        pred = tmp_path / "pred.pgm"
        io.write_map_pgm(SaliencyMap(data=rng.uniform(size=(8, 8))), pred)
        fc = tmp_path / "fc.pgm"
        io.write_map_pgm(SaliencyMap(data=rng.uniform(size=(8, 8))), fc)
        ss = tmp_path / "ss.pgm"
        io.write_map_pgm(SaliencyMap(data=rng.uniform(size=(8, 8))), ss)
        from hypersal.types import TriMask

        label = tmp_path / "label.pgm"
        io.write_trimask_pgm(
            TriMask(data=rng.integers(0, 3, size=(8, 8)).astype(np.uint8)), label
        )
        result = _run_cli([
            "loss", "--pred", str(pred), "--falsecolor", str(fc),
            "--specsal", str(ss), "--label", str(label),
        ])
        assert result.returncode == 0, result.stderr
        breakdown = json.loads(result.stdout)
        assert breakdown["total"] == pytest.approx(
            breakdown["hybrid_crf"] + breakdown["partial_bce"]
            + breakdown["bce_edges"] + breakdown["bce_gate"]
        )

    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "pipeline.cfg"
        cfg.write_text("tau = 0.9\nscale = 0.25\n")
        result = _run_cli(["config", "--config", str(cfg), "--tau", "0.7"])
        assert result.returncode == 0
        effective = parse_config(result.stdout)
        assert effective.tau == 0.7  # flag wins
        assert effective.scale == 0.25  # file wins over default

    def test_bad_cube_reports_error_kind(self, tmp_path):
        (tmp_path / "bad.hdr").write_text("samples = 2\nlines = 2\nbands = 2\n")
        np.zeros(5, dtype="<f4").tofile(tmp_path / "bad.raw")
        result = _run_cli([
            "saliency", "--input", str(tmp_path / "bad.hdr"),
            "--output", str(tmp_path / "x.pgm"),
        ])
        assert result.returncode == 2
        assert json.loads(result.stderr.strip())["error"] == "size-mismatch"
