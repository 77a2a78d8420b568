import math

import numpy as np
import pytest

from scenefactor.geometry import (DegenerateSegmentError, Origin2D, Plane2D,
                                  PlaneParam, param_to_plane,
                                  plane_from_segment, plane_to_param,
                                  point_in_polygon, polygon_area_centroid,
                                  rotate_plane, translate_plane, wrap_angle)


class TestPlaneFromSegment:
    def test_axis_aligned_horizontal(self):
        p = plane_from_segment((0, 0), (2, 0), inward_point=(1, 1))
        assert np.allclose(p.normal, (0, 1))
        assert p.offset == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(p.centroid, (1, 0))
        assert p.length == pytest.approx(2.0)

    def test_axis_aligned_vertical(self):
        p = plane_from_segment((0, 0), (0, 2), inward_point=(-1, 1))
        assert np.allclose(p.normal, (-1, 0))
        assert p.offset == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(p.centroid, (0, 1))

    def test_incidence_property_random(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            p0, p1 = rng.normal(size=2), rng.normal(size=2)
            if np.linalg.norm(p1 - p0) < 1e-6:
                continue
            inward = rng.normal(size=2) * 3
            t = p1 - p0
            if abs(t[0] * (inward[1] - p0[1]) - t[1] * (inward[0] - p0[0])) < 1e-6:
                continue
            p = plane_from_segment(p0, p1, inward)
            assert abs(p.normal @ p.centroid + p.offset) < 1e-9
            assert p.signed_distance(inward) > 0

    def test_degenerate_segment(self):
        with pytest.raises(DegenerateSegmentError):
            plane_from_segment((1, 1), (1, 1), (0, 0))


class TestRotatePlane:
    def test_zero_angle_identity(self):
        p = plane_from_segment((0, 0), (2, 0), (1, 1))
        q = rotate_plane(p, (5, 5), 0.0)
        assert np.array_equal(q.normal, p.normal)
        assert q.offset == p.offset
        assert np.array_equal(q.centroid, p.centroid)

    def test_quarter_turn_about_centroid(self):
        p = plane_from_segment((0, 0), (2, 0), (1, 1))
        q = rotate_plane(p, p.centroid, math.pi / 2)
        assert np.allclose(q.normal, (-1, 0), atol=1e-12)
        assert np.allclose(q.centroid, p.centroid, atol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            p = plane_from_segment(rng.normal(size=2), rng.normal(size=2) + 3,
                                   rng.normal(size=2) + 10)
            pivot = rng.normal(size=2)
            angle = rng.uniform(-math.pi, math.pi)
            q = rotate_plane(rotate_plane(p, pivot, angle), pivot, -angle)
            assert np.allclose(q.normal, p.normal, atol=1e-9)
            assert q.offset == pytest.approx(p.offset, abs=1e-9)
            assert np.allclose(q.centroid, p.centroid, atol=1e-9)


class TestPlaneParam:
    def test_axis_cases(self):
        p = Plane2D(normal=np.array([1.0, 0.0]), offset=-3.0,
                    centroid=np.array([3.0, 0.0]), length=1.0)
        pp = plane_to_param(p)
        assert pp.theta == pytest.approx(0.0)
        assert pp.offset == pytest.approx(-3.0)
        q = Plane2D(normal=np.array([0.0, 1.0]), offset=0.0,
                    centroid=np.array([0.0, 0.0]), length=1.0)
        assert plane_to_param(q).theta == pytest.approx(math.pi / 2)

    def test_round_trip_random(self):
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(1000):
            ang = rng.uniform(-math.pi, math.pi)
            n = np.array([math.cos(ang), math.sin(ang)])
            d = rng.normal() * 5
            c = -d * n + rng.normal() * np.array([-n[1], n[0]])
            p = Plane2D(normal=n, offset=d, centroid=c, length=abs(rng.normal()) + 0.1)
            pp = plane_to_param(p)
            q = param_to_plane(pp, p.centroid, p.length)
            qq = plane_to_param(q)
            worst = max(worst, abs(wrap_angle(qq.theta - pp.theta)),
                        abs(qq.offset - pp.offset))
        assert worst < 1e-9

    def test_theta_wrapped(self):
        assert PlaneParam(theta=3 * math.pi, offset=0.0).theta == pytest.approx(math.pi)


class TestPolygonHelpers:
    def test_square_centroid(self):
        poly = np.array([[0, 0], [4, 0], [4, 4], [0, 4]], dtype=float)
        area, c = polygon_area_centroid(poly)
        assert area == pytest.approx(16.0)
        assert np.allclose(c, (2, 2))

    def test_l_shape_centroid_oracle(self):
        # 4x4 square minus the top-right 2x2 quadrant.
        poly = np.array([[0, 0], [4, 0], [4, 2], [2, 2], [2, 4], [0, 4]],
                        dtype=float)
        area, c = polygon_area_centroid(poly)
        assert area == pytest.approx(12.0)
        # Decomposition oracle: 4x2 bottom slab (area 8, centroid (2,1))
        # plus 2x2 top-left block (area 4, centroid (1,3)).
        cx = (8 * 2 + 4 * 1) / 12
        cy = (8 * 1 + 4 * 3) / 12
        assert np.allclose(c, (cx, cy))
        assert np.allclose(c, (5 / 3, 5 / 3))

    def test_point_in_polygon(self):
        poly = np.array([[0, 0], [4, 0], [4, 4], [0, 4]], dtype=float)
        assert point_in_polygon((2, 2), poly)
        assert not point_in_polygon((5, 2), poly)


class TestInvariants:
    def test_plane_validation(self):
        with pytest.raises(Exception):
            Plane2D(normal=np.array([1.0, 1.0]), offset=0.0,
                    centroid=np.array([0.0, 0.0]), length=1.0)
        with pytest.raises(Exception):
            Plane2D(normal=np.array([0.0, 1.0]), offset=5.0,
                    centroid=np.array([0.0, 0.0]), length=1.0)

    def test_translate_preserves_invariants(self):
        p = plane_from_segment((0, 0), (2, 0), (1, 1))
        q = translate_plane(p, np.array([3.5, -1.25]))
        q.validate()
        assert abs(q.normal @ q.centroid + q.offset) < 1e-9

    def test_origin_finite(self):
        with pytest.raises(Exception):
            Origin2D(np.array([np.nan, 0.0]))
