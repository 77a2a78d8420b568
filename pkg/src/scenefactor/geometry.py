"""2D geometric primitives.

All planes here are vertical building surfaces seen from above, so a plane
reduces to an oriented 2D line: a unit normal pointing toward the side it was
observed from, a signed offset with the convention ``normal . p + offset = 0``,
plus a finite extent (centroid and segment length).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NORMAL_TOL = 1e-9
INCIDENCE_TOL = 1e-6


class DegenerateSegmentError(ValueError):
    """Raised when a segment is too short to define a plane."""


class GeometryError(ValueError):
    """Invalid geometric construction."""


def _vec2(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (2,):
        raise GeometryError(f"expected a 2-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class Plane2D:
    """Oriented infinite line with a finite observed extent."""

    normal: np.ndarray
    offset: float
    centroid: np.ndarray
    length: float

    def __post_init__(self):
        object.__setattr__(self, "normal", _vec2(self.normal))
        object.__setattr__(self, "centroid", _vec2(self.centroid))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "length", float(self.length))
        self.validate()

    def validate(self):
        n = float(np.linalg.norm(self.normal))
        if abs(n - 1.0) > NORMAL_TOL:
            raise GeometryError(f"normal not unit length: |n| = {n!r}")
        res = float(self.normal @ self.centroid + self.offset)
        if abs(res) > INCIDENCE_TOL:
            raise GeometryError(f"centroid off the line by {res!r} m")
        if not self.length > 0.0:
            raise GeometryError(f"length must be positive, got {self.length!r}")

    @property
    def tangent(self) -> np.ndarray:
        """Unit direction along the segment (normal rotated +90 deg)."""
        return np.array([-self.normal[1], self.normal[0]])

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        half = 0.5 * self.length * self.tangent
        return self.centroid - half, self.centroid + half

    def signed_distance(self, point) -> float:
        """Signed distance from a point to the infinite line (positive on the
        observation side)."""
        p = _vec2(point)
        return float(self.normal @ p + self.offset)


@dataclass(frozen=True, eq=False)
class Origin2D:
    """Continuous 2D origin of a room or wall concept node."""

    xy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xy", _vec2(self.xy))
        if not np.all(np.isfinite(self.xy)):
            raise GeometryError("origin components must be finite")


@dataclass(frozen=True)
class PlaneParam:
    """Minimal (theta, offset) parametrization of an infinite oriented line.

    theta is the direction angle of the normal, normalized to (-pi, pi], so
    optimization over theta keeps the implied normal exactly unit length.
    """

    theta: float
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def normal(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    t = math.fmod(theta, 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    elif t > math.pi:
        t -= 2.0 * math.pi
    return t


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def plane_from_segment(p0, p1, inward_point) -> Plane2D:
    """Build a plane from segment endpoints, oriented toward ``inward_point``."""
    p0, p1, inward = _vec2(p0), _vec2(p1), _vec2(inward_point)
    d = p1 - p0
    length = float(np.linalg.norm(d))
    if length < 1e-9:
        raise DegenerateSegmentError(f"segment endpoints coincide: {p0} .. {p1}")
    n = np.array([-d[1], d[0]]) / length
    centroid = 0.5 * (p0 + p1)
    side = float(n @ (inward - centroid))
    if abs(side) < 1e-12:
        raise GeometryError("inward point lies on the segment line")
    if side < 0.0:
        n = -n
    offset = -float(n @ centroid)
    return Plane2D(normal=n, offset=offset, centroid=centroid, length=length)


def rotate_plane(plane: Plane2D, pivot, angle: float) -> Plane2D:
    """Rigidly rotate a plane about ``pivot`` by ``angle`` radians."""
    if angle == 0.0:
        return plane
    pivot = _vec2(pivot)
    R = rotation_matrix(angle)
    centroid = R @ (plane.centroid - pivot) + pivot
    normal = R @ plane.normal
    normal = normal / np.linalg.norm(normal)
    return Plane2D(normal=normal, offset=-float(normal @ centroid),
                   centroid=centroid, length=plane.length)


def translate_plane(plane: Plane2D, t) -> Plane2D:
    t = _vec2(t)
    if t[0] == 0.0 and t[1] == 0.0:
        return plane
    centroid = plane.centroid + t
    return Plane2D(normal=plane.normal, offset=-float(plane.normal @ centroid),
                   centroid=centroid, length=plane.length)


def plane_to_param(plane: Plane2D) -> PlaneParam:
    theta = math.atan2(plane.normal[1], plane.normal[0])
    return PlaneParam(theta=theta, offset=plane.offset)


def param_to_plane(param: PlaneParam, centroid, length: float) -> Plane2D:
    """Inverse of :func:`plane_to_param` on (theta, offset).

    The supplied centroid is projected onto the parametrized line so the
    returned plane satisfies the incidence invariant.
    """
    n = param.normal
    c = _vec2(centroid)
    c_proj = c - (float(n @ c) + param.offset) * n
    return Plane2D(normal=n, offset=param.offset, centroid=c_proj, length=length)


def polygon_area_centroid(vertices: np.ndarray) -> tuple[float, np.ndarray]:
    """Signed area and area centroid of a simple polygon (shoelace)."""
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    if abs(area) < 1e-12:
        raise GeometryError("degenerate polygon")
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    return area, np.array([cx, cy])


def point_in_polygon(point, vertices: np.ndarray) -> bool:
    """Ray-casting point-in-polygon test (strict interior not guaranteed on
    boundary points)."""
    p = _vec2(point)
    v = np.asarray(vertices, dtype=np.float64)
    inside = False
    j = len(v) - 1
    for i in range(len(v)):
        xi, yi = v[i]
        xj, yj = v[j]
        if (yi > p[1]) != (yj > p[1]):
            x_cross = xi + (p[1] - yi) * (xj - xi) / (yj - yi)
            if p[0] < x_cross:
                inside = not inside
        j = i
    return inside
