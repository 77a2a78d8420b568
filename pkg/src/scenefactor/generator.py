"""Procedural generator of building layouts with ground truth and noise.

A voxel grid is partitioned into axis-aligned rooms by recursive guillotine
splits; each split line becomes a wall with a sampled thickness and rooms are
inset by half that thickness. Rooms optionally lose one corner quadrant
(L-shape). Every room face contributes one inward-facing plane; pairs of
exactly mirrored faces of different rooms form 2-plane wall entities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import (
    Origin2D,
    Plane2D,
    plane_from_segment,
    polygon_area_centroid,
    rotate_plane,
    rotation_matrix,
    translate_plane,
)
from .graphs import Edge, SceneGraph

_SPLIT_PROB = 0.8  # chance of splitting an already-legal cell further
_GEOM_TOL = 1e-9


class ConfigInfeasibleError(ValueError):
    pass


@dataclass
class GeneratorConfig:
    """Knobs of the synthetic dataset; defaults follow the reference setup."""

    voxels_xy_range: tuple[int, int] = (25, 70)
    voxels_per_room_range: tuple[int, int] = (10, 60)
    max_building_size_m: tuple[float, float] = (60.0, 100.0)
    voxel_size_m: tuple[float, float] = (0.1, 0.2)
    n_buildings: int = 2000
    wall_thickness_m: tuple[float, float] = (0.05, 0.15)
    plane_dropout: float = 0.10
    l_shape_prob: float = 0.40
    knn_k: int = 10
    noise_global_rot_deg: tuple[float, float] = (0.0, 360.0)
    noise_plane_rot_deg: tuple[float, float] = (0.0, 5.0)
    noise_room_trans_m: tuple[float, float] = (0.0, 0.1)
    noise_room_rot_deg: tuple[float, float] = (0.0, 3.0)
    seed: int = 0

    def validate(self):
        for name in ("voxels_xy_range", "voxels_per_room_range", "max_building_size_m",
                     "voxel_size_m", "wall_thickness_m", "noise_global_rot_deg",
                     "noise_plane_rot_deg", "noise_room_trans_m", "noise_room_rot_deg"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigInfeasibleError(f"{name}: empty interval [{lo}, {hi}]")
        for name in ("plane_dropout", "l_shape_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigInfeasibleError(f"{name}: {p} outside [0, 1]")
        if self.knn_k < 1 or self.n_buildings < 0:
            raise ConfigInfeasibleError("knn_k must be >= 1 and n_buildings >= 0")
        if self.voxels_per_room_range[0] > self.voxels_xy_range[1]:
            raise ConfigInfeasibleError("minimum room size exceeds the largest grid")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        kwargs = {}
        for name, f in cls.__dataclass_fields__.items():
            if name in d:
                v = d[name]
                kwargs[name] = tuple(v) if isinstance(v, (list, tuple)) else v
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigInfeasibleError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


@dataclass
class Room:
    id: int
    plane_ids: list[int]
    polygon: np.ndarray  # CCW vertices, meters
    origin: np.ndarray


@dataclass
class Wall:
    id: int
    plane_ids: tuple[int, int]
    origin: np.ndarray


@dataclass
class BuildingSample:
    planes: dict[int, Plane2D]      # ground-truth planes
    rooms: list[Room]
    walls: list[Wall]
    observed: dict[int, Plane2D]    # noisy / dropped-out observations
    provenance: dict[int, int]      # observed id -> ground-truth id
    rng_seed: int
    meta: dict = field(default_factory=dict)

    def concept_ids(self) -> list[int]:
        return [r.id for r in self.rooms] + [w.id for w in self.walls]

    def room_of_plane(self) -> dict[int, int]:
        return {p: r.id for r in self.rooms for p in r.plane_ids}

    def wall_of_plane(self) -> dict[int, int]:
        return {p: w.id for w in self.walls for p in w.plane_ids}

    def ground_truth(self) -> SceneGraph:
        g = SceneGraph()
        for pid in sorted(self.planes):
            g.add_plane(pid, self.planes[pid])
        for r in self.rooms:
            g.add_concept(r.id, "room", Origin2D(r.origin))
            for p in r.plane_ids:
                g.edges.append(Edge(src=r.id, dst=p, kind="membership"))
            for i, a in enumerate(r.plane_ids):
                for b in r.plane_ids[i + 1:]:
                    g.edges.append(Edge(src=min(a, b), dst=max(a, b), kind="same_room"))
        for w in self.walls:
            g.add_concept(w.id, "wall", Origin2D(w.origin))
            a, b = w.plane_ids
            g.edges.append(Edge(src=w.id, dst=a, kind="membership"))
            g.edges.append(Edge(src=w.id, dst=b, kind="membership"))
            g.edges.append(Edge(src=min(a, b), dst=max(a, b), kind="same_wall"))
        g.validate()
        return g

    def check_invariants(self):
        for r in self.rooms:
            if len(r.plane_ids) < 2:
                raise AssertionError(f"room {r.id} has {len(r.plane_ids)} planes")
        for w in self.walls:
            if len(w.plane_ids) != 2:
                raise AssertionError(f"wall {w.id} has {len(w.plane_ids)} planes")
        for oid, gid in self.provenance.items():
            if gid not in self.planes:
                raise AssertionError(f"observed plane {oid} maps to missing plane {gid}")


@dataclass
class _Cell:
    x0: int
    y0: int
    x1: int
    y1: int
    # wall thickness (m) on each bounding line; 0 = building exterior
    t_xlo: float = 0.0
    t_xhi: float = 0.0
    t_ylo: float = 0.0
    t_yhi: float = 0.0


def _partition_grid(nx: int, ny: int, rmin: int, rmax: int,
                    thickness_range: tuple[float, float],
                    rng: np.random.Generator) -> list[_Cell]:
    cells = []
    stack = [_Cell(0, 0, nx, ny)]
    while stack:
        c = stack.pop()
        w, h = c.x1 - c.x0, c.y1 - c.y0
        must = [ax for ax, side in (("x", w), ("y", h)) if side > rmax]
        can = [ax for ax, side in (("x", w), ("y", h)) if side >= 2 * rmin]
        if must:
            choices = [ax for ax in must if ax in can]
            if not choices:
                raise ConfigInfeasibleError(
                    f"cell side exceeds max {rmax} voxels but cannot be split "
                    f"with min {rmin}")
        elif can and rng.random() < _SPLIT_PROB:
            choices = can
        else:
            cells.append(c)
            continue
        axis = choices[0] if len(choices) == 1 else choices[int(rng.integers(0, 2))]
        t = float(rng.uniform(*thickness_range))
        if axis == "x":
            pos = int(rng.integers(c.x0 + rmin, c.x1 - rmin + 1))
            left = _Cell(c.x0, c.y0, pos, c.y1, c.t_xlo, t, c.t_ylo, c.t_yhi)
            right = _Cell(pos, c.y0, c.x1, c.y1, t, c.t_xhi, c.t_ylo, c.t_yhi)
            stack.extend([right, left])
        else:
            pos = int(rng.integers(c.y0 + rmin, c.y1 - rmin + 1))
            bottom = _Cell(c.x0, c.y0, c.x1, pos, c.t_xlo, c.t_xhi, c.t_ylo, t)
            top = _Cell(c.x0, pos, c.x1, c.y1, c.t_xlo, c.t_xhi, t, c.t_yhi)
            stack.extend([top, bottom])
    cells.sort(key=lambda c: (c.y0, c.x0))
    return cells


def _room_polygon(c: _Cell, voxel_m: float, l_shaped: bool,
                  rng: np.random.Generator) -> np.ndarray:
    x0 = c.x0 * voxel_m + 0.5 * c.t_xlo
    x1 = c.x1 * voxel_m - 0.5 * c.t_xhi
    y0 = c.y0 * voxel_m + 0.5 * c.t_ylo
    y1 = c.y1 * voxel_m - 0.5 * c.t_yhi
    if not l_shaped:
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    corner = int(rng.integers(0, 4))  # 0=SW, 1=SE, 2=NE, 3=NW
    fx, fy = rng.uniform(0.4, 0.6, size=2)
    nx, ny = fx * (x1 - x0), fy * (y1 - y0)
    if corner == 0:
        return np.array([[x0, y0 + ny], [x0 + nx, y0 + ny], [x0 + nx, y0],
                         [x1, y0], [x1, y1], [x0, y1]])
    if corner == 1:
        return np.array([[x0, y0], [x1 - nx, y0], [x1 - nx, y0 + ny],
                         [x1, y0 + ny], [x1, y1], [x0, y1]])
    if corner == 2:
        return np.array([[x0, y0], [x1, y0], [x1, y1 - ny],
                         [x1 - nx, y1 - ny], [x1 - nx, y1], [x0, y1]])
    return np.array([[x0, y0], [x1, y0], [x1, y1],
                     [x0 + nx, y1], [x0 + nx, y1 - ny], [x0, y1 - ny]])


def _planes_of_polygon(poly: np.ndarray) -> list[Plane2D]:
    """One inward-facing plane per CCW polygon edge."""
    _, centroid = polygon_area_centroid(poly)
    planes = []
    n = len(poly)
    for i in range(n):
        p0, p1 = poly[i], poly[(i + 1) % n]
        d = p1 - p0
        nvec = np.array([-d[1], d[0]]) / np.linalg.norm(d)  # CCW => inward
        mid = 0.5 * (p0 + p1)
        planes.append(Plane2D(normal=nvec, offset=-float(nvec @ mid),
                              centroid=mid, length=float(np.linalg.norm(d))))
    return planes


def detect_walls(rooms: list[Room], planes: dict[int, Plane2D],
                 max_gap: float) -> list[tuple[int, int]]:
    """Pairs of exactly mirrored faces of different rooms: antiparallel
    normals, equal extents, centroids directly across a gap <= max_gap."""
    room_of = {p: r.id for r in rooms for p in r.plane_ids}
    ids = sorted(planes)
    pairs = []
    used = set()
    for i, a_id in enumerate(ids):
        if a_id in used:
            continue
        a = planes[a_id]
        for b_id in ids[i + 1:]:
            if b_id in used or room_of.get(a_id) == room_of.get(b_id):
                continue
            b = planes[b_id]
            if a.normal @ b.normal > -1.0 + _GEOM_TOL:
                continue
            if abs(a.length - b.length) > _GEOM_TOL:
                continue
            dc = b.centroid - a.centroid
            if abs(float(a.normal[0] * dc[1] - a.normal[1] * dc[0])) > _GEOM_TOL:
                continue
            gap = -float(a.normal @ dc)
            if _GEOM_TOL < gap <= max_gap + _GEOM_TOL:
                pairs.append((a_id, b_id))
                used.update((a_id, b_id))
                break
    return pairs


def generate_layout(cfg: GeneratorConfig, rng: np.random.Generator,
                    rng_seed: int = 0) -> BuildingSample:
    """Noiseless building sample; observations start as exact copies."""
    cfg.validate()
    nx = int(rng.integers(cfg.voxels_xy_range[0], cfg.voxels_xy_range[1] + 1))
    ny = int(rng.integers(cfg.voxels_xy_range[0], cfg.voxels_xy_range[1] + 1))
    voxel_m = float(rng.uniform(*cfg.voxel_size_m))
    max_size = float(rng.uniform(*cfg.max_building_size_m))
    nx = min(nx, int(max_size / voxel_m))
    ny = min(ny, int(max_size / voxel_m))
    rmin, rmax = cfg.voxels_per_room_range
    if rmin > nx or rmin > ny:
        raise ConfigInfeasibleError(
            f"min room {rmin} voxels does not fit the {nx}x{ny} grid")
    cells = _partition_grid(nx, ny, rmin, rmax, cfg.wall_thickness_m, rng)
    return build_from_cells(cells, voxel_m, cfg, rng, rng_seed=rng_seed)


def build_from_cells(cells: list[_Cell], voxel_m: float, cfg: GeneratorConfig,
                     rng: np.random.Generator, rng_seed: int = 0) -> BuildingSample:
    planes: dict[int, Plane2D] = {}
    room_specs = []
    pid = 0
    for c in cells:
        l_shaped = bool(rng.random() < cfg.l_shape_prob)
        poly = _room_polygon(c, voxel_m, l_shaped, rng)
        face_planes = _planes_of_polygon(poly)
        ids = []
        for p in face_planes:
            planes[pid] = p
            ids.append(pid)
            pid += 1
        _, centroid = polygon_area_centroid(poly)
        room_specs.append((ids, poly, centroid))
    n_planes = pid
    rooms = []
    for i, (ids, poly, centroid) in enumerate(room_specs):
        rooms.append(Room(id=n_planes + i, plane_ids=ids, polygon=poly, origin=centroid))
    wall_pairs = detect_walls(rooms, planes, max_gap=cfg.wall_thickness_m[1])
    walls = []
    next_id = n_planes + len(rooms)
    for j, (a, b) in enumerate(wall_pairs):
        origin = 0.5 * (planes[a].centroid + planes[b].centroid)
        walls.append(Wall(id=next_id + j, plane_ids=(a, b), origin=origin))
    sample = BuildingSample(
        planes=planes, rooms=rooms, walls=walls,
        observed=dict(planes), provenance={i: i for i in planes},
        rng_seed=rng_seed,
        meta={"voxel_size_m": voxel_m, "n_cells": len(cells)},
    )
    sample.check_invariants()
    return sample


def _rotate_point(p: np.ndarray, pivot: np.ndarray, R: np.ndarray) -> np.ndarray:
    return R @ (p - pivot) + pivot


def apply_noise(sample: BuildingSample, cfg: GeneratorConfig,
                rng: np.random.Generator) -> BuildingSample:
    """Room-rigid noise, then per-plane rotation, then global rotation.

    Ground-truth geometry receives the room and global transforms (the layout
    itself deforms); the per-plane rotation only perturbs observations. Wall
    origins are recomputed as centroid midpoints after the room transforms,
    since a wall straddles two independently transformed rooms.
    """
    gt = dict(sample.planes)
    rooms = []
    for r in sorted(sample.rooms, key=lambda r: r.id):
        ang = math.radians(float(rng.uniform(-cfg.noise_room_rot_deg[1],
                                             cfg.noise_room_rot_deg[1])))
        direction = float(rng.uniform(0.0, 2.0 * math.pi))
        mag = float(rng.uniform(*cfg.noise_room_trans_m))
        t = mag * np.array([math.cos(direction), math.sin(direction)])
        poly = r.polygon
        origin = r.origin
        if ang != 0.0:
            R = rotation_matrix(ang)
            for p in r.plane_ids:
                gt[p] = rotate_plane(gt[p], origin, ang)
            poly = np.array([_rotate_point(v, origin, R) for v in poly])
        if t[0] != 0.0 or t[1] != 0.0:
            for p in r.plane_ids:
                gt[p] = translate_plane(gt[p], t)
            poly = poly + t
            origin = origin + t
        rooms.append(Room(id=r.id, plane_ids=list(r.plane_ids), polygon=poly, origin=origin))
    walls = [Wall(id=w.id, plane_ids=w.plane_ids,
                  origin=0.5 * (gt[w.plane_ids[0]].centroid + gt[w.plane_ids[1]].centroid))
             for w in sample.walls]
    observed = {}
    for oid in sorted(sample.observed):
        gid = sample.provenance[oid]
        ang = math.radians(float(rng.uniform(-cfg.noise_plane_rot_deg[1],
                                             cfg.noise_plane_rot_deg[1])))
        observed[oid] = rotate_plane(gt[gid], gt[gid].centroid, ang)
    g_ang = math.radians(float(rng.uniform(*cfg.noise_global_rot_deg)))
    if g_ang != 0.0:
        R = rotation_matrix(g_ang)
        zero = np.zeros(2)
        gt = {i: rotate_plane(p, zero, g_ang) for i, p in gt.items()}
        observed = {i: rotate_plane(p, zero, g_ang) for i, p in observed.items()}
        rooms = [Room(id=r.id, plane_ids=r.plane_ids,
                      polygon=(R @ r.polygon.T).T, origin=R @ r.origin)
                 for r in rooms]
        walls = [Wall(id=w.id, plane_ids=w.plane_ids, origin=R @ w.origin)
                 for w in walls]
    meta = dict(sample.meta)
    meta["global_rot_rad"] = g_ang
    return BuildingSample(planes=gt, rooms=rooms, walls=walls, observed=observed,
                          provenance=dict(sample.provenance),
                          rng_seed=sample.rng_seed, meta=meta)


def apply_dropout(sample: BuildingSample, cfg: GeneratorConfig,
                  rng: np.random.Generator) -> BuildingSample:
    """Drop observations independently; prune concepts below 2 surviving
    members and restrict ground truth to surviving planes."""
    observed = {}
    for oid in sorted(sample.observed):
        if rng.random() >= cfg.plane_dropout:
            observed[oid] = sample.observed[oid]
    surviving = {sample.provenance[oid] for oid in observed}
    planes = {i: p for i, p in sample.planes.items() if i in surviving}
    rooms = []
    for r in sample.rooms:
        members = [p for p in r.plane_ids if p in surviving]
        if len(members) >= 2:
            rooms.append(Room(id=r.id, plane_ids=members, polygon=r.polygon,
                              origin=r.origin))
    walls = [w for w in sample.walls
             if w.plane_ids[0] in surviving and w.plane_ids[1] in surviving]
    return BuildingSample(planes=planes, rooms=rooms, walls=walls,
                          observed=observed,
                          provenance={o: g for o, g in sample.provenance.items()
                                      if o in observed},
                          rng_seed=sample.rng_seed, meta=dict(sample.meta))


def ground_truth_origins(sample: BuildingSample) -> dict[int, Origin2D]:
    out = {}
    for r in sample.rooms:
        out[r.id] = Origin2D(r.origin)
    for w in sample.walls:
        out[w.id] = Origin2D(w.origin)
    return out


def build_sample(cfg: GeneratorConfig, index: int) -> BuildingSample:
    """Deterministic end-to-end sample: layout, noise, dropout.

    Each building owns an independent stream derived from (seed, index)."""
    rng = np.random.default_rng([cfg.seed & 0xFFFFFFFFFFFFFFFF, index])
    sample = generate_layout(cfg, rng, rng_seed=index)
    sample = apply_noise(sample, cfg, rng)
    return apply_dropout(sample, cfg, rng)


def generate_dataset(cfg: GeneratorConfig):
    """Yield cfg.n_buildings deterministic samples."""
    for i in range(cfg.n_buildings):
        yield build_sample(cfg, i)
