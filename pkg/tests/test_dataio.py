import numpy as np

from scenefactor import dataio
from scenefactor.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from scenefactor.generator import GeneratorConfig, build_sample
from scenefactor.geometry import Origin2D, plane_from_segment
from scenefactor.graphs import SceneGraph

import pytest


class TestRoundFloats:
    def test_nine_significant_digits(self):
        assert dataio.round_floats(np.pi) == float(f"{np.pi:.9g}")

    def test_nested_containers(self):
        out = dataio.round_floats({"a": [np.float64(1.0), (2, np.int64(3))]})
        assert out == {"a": [1.0, [2, 3]]}
        assert isinstance(out["a"][1][1], int)


class TestPlaneRecords:
    def test_round_trip_preserves_invariants(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p0 = rng.uniform(-30, 30, size=2)
            d = rng.uniform(-1, 1, size=2)
            d /= np.linalg.norm(d)
            p = plane_from_segment(p0, p0 + d * rng.uniform(0.5, 5),
                                   p0 + d / 2 + rng.normal(size=2))
            rec = dataio.round_floats(dataio.plane_to_record(7, p))
            pid, q = dataio.plane_from_record(rec)
            assert pid == 7
            # Invariants survive rounding: unit normal, centroid on plane.
            assert np.isclose(np.linalg.norm(q.normal), 1.0, atol=1e-12)
            assert abs(q.normal @ q.centroid + q.offset) < 1e-12
            assert np.allclose(q.normal, p.normal, atol=1e-7)
            assert np.allclose(q.centroid, p.centroid, atol=1e-6)


class TestSampleRecords:
    def test_round_trip(self, tmp_path):
        cfg = GeneratorConfig(seed=9, voxels_xy_range=(15, 20))
        samples = [build_sample(cfg, i) for i in range(3)]
        path = tmp_path / "data.jsonl"
        dataio.write_jsonl(path, (dataio.sample_to_record(s) for s in samples))
        back = [dataio.sample_from_record(r) for r in dataio.read_jsonl(path)]
        for s, b in zip(samples, back):
            assert sorted(s.observed) == sorted(b.observed)
            assert s.provenance == b.provenance
            assert [r.id for r in s.rooms] == [r.id for r in b.rooms]
            for rs, rb in zip(s.rooms, b.rooms):
                assert rs.plane_ids == list(rb.plane_ids)
                assert np.allclose(np.asarray(rs.origin),
                                   np.asarray(rb.origin), atol=1e-6)
            assert [(w.id, tuple(w.plane_ids)) for w in s.walls] == \
                   [(w.id, tuple(w.plane_ids)) for w in b.walls]

    def test_serialization_deterministic(self, tmp_path):
        cfg = GeneratorConfig(seed=10, voxels_xy_range=(15, 18))
        for name in ("a.jsonl", "b.jsonl"):
            samples = [build_sample(cfg, i) for i in range(2)]
            dataio.write_jsonl(tmp_path / name,
                               (dataio.sample_to_record(s) for s in samples))
        assert (tmp_path / "a.jsonl").read_bytes() == \
               (tmp_path / "b.jsonl").read_bytes()


class TestSceneRecords:
    def test_round_trip(self):
        g = SceneGraph()
        g.add_plane(0, plane_from_segment((0, 0), (1, 0), (0.5, 1)))
        g.add_plane(1, plane_from_segment((0, 2), (1, 2), (0.5, 1)))
        g.add_concept(10, "room", Origin2D(np.array([0.5, 1.0])))
        g.add_edge(0, 1, "same_room", score=0.9)
        g.add_edge(10, 0, "membership")
        rec = dataio.round_floats(dataio.scene_to_record(g, scene_id=4))
        back = dataio.scene_from_record(rec)
        assert sorted(back.nodes) == [0, 1, 10]
        assert back.nodes[10].kind == "room"
        kinds = sorted(e.kind for e in back.edges)
        assert kinds == ["membership", "same_room"]
        scored = [e for e in back.edges if e.kind == "same_room"][0]
        assert np.isclose(scored.score, 0.9)


class TestCheckpoint:
    def test_arrays_bitwise_lossless(self, tmp_path):
        rng = np.random.default_rng(1)
        arrays = {f"p{i}": rng.standard_normal((3, 5)) for i in range(4)}
        meta = {"model": "test", "hidden": 64}
        path = tmp_path / "ckpt.npz"
        save_checkpoint(path, meta, arrays)
        meta2, arrays2 = load_checkpoint(path)
        assert meta2 == meta
        for k in arrays:
            assert np.array_equal(arrays[k], arrays2[k])
            assert arrays2[k].dtype == arrays[k].dtype

    def test_corrupt_file_raises(self, tmp_path):
        path = tmp_path / "bad.npz"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises((CheckpointError, ValueError, OSError)):
            load_checkpoint(path)
