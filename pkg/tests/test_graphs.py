import numpy as np
import pytest

from scenefactor.geometry import plane_from_segment, translate_plane
from scenefactor.graphs import (InsufficientPlanesError, build_proximity_graph,
                                edge_feature_matrix, local_frame,
                                localize_features, node_feature_matrix)


def seg(x0, y0, x1, y1, inward):
    return plane_from_segment((x0, y0), (x1, y1), inward)


def square_room(cx=0.0, cy=0.0, half=1.0):
    c = np.array([cx, cy])
    return {
        0: seg(cx - half, cy - half, cx + half, cy - half, c),
        1: seg(cx + half, cy - half, cx + half, cy + half, c),
        2: seg(cx + half, cy + half, cx - half, cy + half, c),
        3: seg(cx - half, cy + half, cx - half, cy - half, c),
    }


class TestProximityGraph:
    def test_two_planes_clamped(self):
        planes = {0: seg(0, 0, 1, 0, (0.5, 1)), 1: seg(0, 2, 1, 2, (0.5, 1))}
        g = build_proximity_graph(planes, k=10)
        assert len(g.edges_of_kind("proximity")) == 1

    def test_three_collinear_k1(self):
        planes = {0: seg(-0.5, 0, 0.5, 0, (0, 1)),
                  1: seg(0.5, 0, 1.5, 0, (1, 1)),
                  2: seg(4.5, 0, 5.5, 0, (5, 1))}
        g = build_proximity_graph(planes, k=1)
        pairs = {(e.src, e.dst) for e in g.edges_of_kind("proximity")}
        assert pairs == {(0, 1), (1, 2)}

    def test_tie_breaks_to_lower_id(self):
        # Node 0 equidistant from 1 and 2; k=1 must pick node 1.
        planes = {0: seg(-0.5, 0, 0.5, 0, (0, 1)),
                  1: seg(1.5, 0, 2.5, 0, (2, 1)),
                  2: seg(-2.5, 0, -1.5, 0, (-2, 1))}
        g = build_proximity_graph(planes, k=1)
        nbrs = {e.dst for e in g.edges_of_kind("proximity") if e.src == 0}
        nbrs |= {e.src for e in g.edges_of_kind("proximity") if e.dst == 0}
        assert 1 in nbrs

    def test_insufficient_planes(self):
        with pytest.raises(InsufficientPlanesError):
            build_proximity_graph({0: seg(0, 0, 1, 0, (0, 1))}, k=1)

    def test_symmetric_no_duplicates(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-5, 5, size=(12, 2))
        planes = {i: seg(p[0], p[1], p[0] + 1, p[1], (p[0] + 0.5, p[1] + 1))
                  for i, p in enumerate(pts)}
        g = build_proximity_graph(planes, k=3)
        seen = set()
        for e in g.edges_of_kind("proximity"):
            assert e.src < e.dst
            assert (e.src, e.dst) not in seen
            seen.add((e.src, e.dst))


class TestEdgeAttr:
    def test_symmetric_fields(self):
        from scenefactor.graphs import _edge_attr
        a = seg(0, 0, 2, 0, (1, 1))
        b = seg(0, 3, 2, 3, (1, 2))
        ab = _edge_attr(a, b)
        ba = _edge_attr(b, a)
        assert ab.centroid_dist == pytest.approx(ba.centroid_dist, abs=1e-12)
        assert ab.min_endpoint_dist == pytest.approx(ba.min_endpoint_dist, abs=1e-12)
        assert ab.normal_dot == pytest.approx(ba.normal_dot, abs=1e-12)
        assert ab.relative_angle == pytest.approx(ba.relative_angle, abs=1e-12)


class TestLocalize:
    def test_two_symmetric_planes(self):
        planes = {0: seg(-2, -1, -2, 1, (0, 0)), 1: seg(2, -1, 2, 1, (0, 0))}
        g = build_proximity_graph(planes, k=1)
        feats = localize_features(g)
        assert np.allclose(feats[0].centroid_local, -feats[1].centroid_local)

    def test_translation_invariance_bitwise(self):
        rng = np.random.default_rng(1)
        for trial in range(20):
            pts = rng.uniform(-5, 5, size=(8, 2))
            planes = {i: seg(p[0], p[1], p[0] + 1, p[1],
                             (p[0] + 0.5, p[1] + 1)) for i, p in enumerate(pts)}
            g0 = build_proximity_graph(planes, k=3)
            t = np.array([100.0, -50.0])
            moved = {i: translate_plane(p, t) for i, p in planes.items()}
            g1 = build_proximity_graph(moved, k=3)
            nf0, _ = node_feature_matrix(g0)
            nf1, _ = node_feature_matrix(g1)
            assert np.array_equal(nf0, nf1)
            ef0, _ = edge_feature_matrix(g0)
            ef1, _ = edge_feature_matrix(g1)
            assert np.array_equal(ef0, ef1)

    def test_local_frame_is_bbox_center(self):
        planes = square_room(cx=10, cy=-4)
        ref = local_frame(planes)
        cents = np.array([p.centroid for p in planes.values()])
        assert np.array_equal(ref, 0.5 * (cents.min(axis=0) + cents.max(axis=0)))
