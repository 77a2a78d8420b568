import json

import numpy as np
import pytest
from click.testing import CliRunner

from scenefactor import dataio
from scenefactor.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Run the full CLI chain once on a tiny dataset; commands share files."""
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()
    cfg = {"voxels_xy_range": [22, 22], "voxels_per_room_range": [10, 22],
           "voxel_size_m": [0.2, 0.2], "l_shape_prob": 0.0,
           "plane_dropout": 0.0, "noise_room_trans_m": [0.0, 0.02],
           "noise_global_rot_deg": [0.0, 0.0],
           "noise_plane_rot_deg": [0.0, 0.0],
           "noise_room_rot_deg": [0.0, 0.0]}
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(cfg))

    def run(*args):
        result = runner.invoke(main, list(args), catch_exceptions=False)
        assert result.exit_code == 0, result.output
        return result

    data = root / "data.jsonl"
    run("--seed", "5", "--config", str(cfg_path),
        "generate", "--out", str(data), "--n", "10")
    g_ckpt = root / "g.npz"
    run("--seed", "0", "train-edges", "--data", str(data),
        "--out", str(g_ckpt), "--epochs", "60")
    room_ckpt = root / "room.npz"
    run("--seed", "1", "train-origins", "--kind", "room",
        "--data", str(data), "--out", str(room_ckpt), "--epochs", "40")
    wall_ckpt = root / "wall.npz"
    run("--seed", "2", "train-origins", "--kind", "wall",
        "--data", str(data), "--out", str(wall_ckpt), "--epochs", "20")
    return {"root": root, "run": run, "data": data, "g": g_ckpt,
            "room": room_ckpt, "wall": wall_ckpt}


class TestGenerate:
    def test_dataset_well_formed(self, workspace):
        records = dataio.read_jsonl(workspace["data"])
        assert len(records) == 10
        for rec in records:
            assert rec["planes"] and rec["rooms"]
            assert "origins" in rec and "provenance" in rec

    def test_deterministic_given_seed(self, workspace, tmp_path):
        out = tmp_path / "again.jsonl"
        cfg_path = workspace["root"] / "config.json"
        workspace["run"]("--seed", "5", "--config", str(cfg_path),
                         "generate", "--out", str(out), "--n", "10")
        assert out.read_bytes() == workspace["data"].read_bytes()


class TestStages:
    def test_classify_cluster_infer(self, workspace):
        root, run = workspace["root"], workspace["run"]
        classified = root / "classified.jsonl"
        run("classify", "--model", str(workspace["g"]),
            "--scene", str(workspace["data"]), "--out", str(classified))
        recs = dataio.read_jsonl(classified)
        assert recs and all("edges" in r for r in recs)
        for r in recs:
            for e in r["edges"]:
                assert e["label"] in ("none", "same_room", "same_wall")
                assert len(e["proba"]) == 3

        clusters = root / "clusters.jsonl"
        run("cluster", "--scene", str(workspace["data"]),
            "--classified", str(classified), "--out", str(clusters))
        crecs = dataio.read_jsonl(clusters)
        assert crecs and all("clusters" in r for r in crecs)

        origins = root / "origins.jsonl"
        run("infer-origins", "--model", str(workspace["room"]),
            "--clusters", str(clusters), "--out", str(origins))
        orecs = dataio.read_jsonl(origins)
        assert any(r["origins"] for r in orecs)

    def test_pipeline_and_optimize(self, workspace):
        root, run = workspace["root"], workspace["run"]
        scenes = root / "scenes.jsonl"
        run("pipeline", "--scene", str(workspace["data"]),
            "--g-model", str(workspace["g"]),
            "--room-model", str(workspace["room"]),
            "--wall-model", str(workspace["wall"]),
            "--out", str(scenes), "--timings")
        srecs = dataio.read_jsonl(scenes)
        assert len(srecs) == 10
        assert all("timings" in r for r in srecs)

        optimized = root / "optimized.jsonl"
        run("optimize", "--problem", str(scenes),
            "--room-model", str(workspace["room"]),
            "--wall-model", str(workspace["wall"]),
            "--out", str(optimized), "--max-iters", "5")
        orecs = dataio.read_jsonl(optimized)
        assert all("optimization" in r for r in orecs)
        for r in orecs:
            opt = r["optimization"]
            assert opt["costs"][-1] <= opt["costs"][0] + 1e-12

    def test_eval_report(self, workspace):
        root, run = workspace["root"], workspace["run"]
        report = root / "report.txt"
        run("eval", "--data", str(workspace["data"]),
            "--g-model", str(workspace["g"]),
            "--room-model", str(workspace["room"]),
            "--wall-model", str(workspace["wall"]),
            "--out", str(report))
        text = report.read_text()
        for key in ("edge.precision", "edge.recall", "edge.auc",
                    "origin.room.rmse_m", "time.generation_s_median"):
            assert key in text
        for line in text.strip().splitlines():
            assert " = " in line

    def test_render_svg(self, workspace):
        root, run = workspace["root"], workspace["run"]
        svg = root / "scene.svg"
        run("render", "--scene", str(workspace["data"]),
            "--out", str(svg), "--index", "0")
        content = svg.read_text()
        assert content.startswith("<svg") or "<svg" in content
        assert "</svg>" in content


class TestErrors:
    def test_missing_file_fails_cleanly(self):
        runner = CliRunner()
        result = runner.invoke(main, ["train-edges", "--data", "/nonexistent",
                                      "--out", "/tmp/x.npz"])
        assert result.exit_code != 0

    def test_wrong_model_kind_rejected(self, workspace):
        runner = CliRunner()
        result = runner.invoke(
            main, ["classify", "--model", str(workspace["room"]),
                   "--scene", str(workspace["data"]), "--out", "/tmp/y.jsonl"])
        assert result.exit_code != 0
