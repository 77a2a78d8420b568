"""Heterogeneous scene graph model and proximity-graph construction.

Plane nodes are connected to their k nearest neighbors by centroid distance;
the resulting undirected, attributed graph is what the edge classifier
consumes. Node and edge features are expressed in a local frame (the bounding
box center of the plane centroids) so they are invariant under global
translation, and every feature scalar is snapped to a 2^-20 grid, which makes
that invariance hold bitwise rather than just approximately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Origin2D, Plane2D

NODE_KINDS = ("plane", "room", "wall")
EDGE_KINDS = ("proximity", "same_room", "same_wall", "membership")
EDGE_CLASSES = ("none", "same_room", "same_wall")

FEATURE_SNAP = 2.0 ** 20  # ~1e-6 m grid, far below every modeled noise scale


class SceneGraphError(ValueError):
    pass


class InsufficientPlanesError(SceneGraphError):
    pass


def snap(x):
    """Quantize features so translation-invariant quantities are bitwise so."""
    return np.round(np.asarray(x, dtype=np.float64) * FEATURE_SNAP) / FEATURE_SNAP


@dataclass(frozen=True)
class EdgeAttr:
    """Pairwise geometric attributes of a plane-plane edge.

    centroid_offset_along_normal is direction dependent and is stored for the
    canonical (lower id -> higher id) orientation.
    """

    centroid_dist: float
    min_endpoint_dist: float
    normal_dot: float
    relative_angle: float
    centroid_offset_along_normal: float


@dataclass(frozen=True, eq=False)
class NodeFeature:
    normal: np.ndarray
    offset_residual: float
    centroid_local: np.ndarray
    length: float

    def as_array(self) -> np.ndarray:
        return np.array([self.normal[0], self.normal[1], self.offset_residual,
                         self.centroid_local[0], self.centroid_local[1], self.length])


@dataclass
class Node:
    kind: str
    plane: Plane2D | None = None
    origin: Origin2D | None = None

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise SceneGraphError(f"unknown node kind {self.kind!r}")
        if self.kind == "plane":
            if self.plane is None or self.origin is not None:
                raise SceneGraphError("plane nodes carry a plane and no origin")
        else:
            if self.origin is None or self.plane is not None:
                raise SceneGraphError(f"{self.kind} nodes carry an origin and no plane")


@dataclass
class Edge:
    src: int
    dst: int
    kind: str
    attr: EdgeAttr | None = None
    score: float | None = None

    def key(self) -> tuple[int, int, str]:
        lo, hi = (self.src, self.dst) if self.src <= self.dst else (self.dst, self.src)
        return lo, hi, self.kind


@dataclass
class SceneGraph:
    nodes: dict[int, Node] = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)

    def validate(self):
        seen = set()
        for e in self.edges:
            if e.kind not in EDGE_KINDS:
                raise SceneGraphError(f"unknown edge kind {e.kind!r}")
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise SceneGraphError(f"edge references missing node: {e}")
            ks, kd = self.nodes[e.src].kind, self.nodes[e.dst].kind
            if e.kind == "membership":
                if not (ks in ("room", "wall") and kd == "plane"):
                    raise SceneGraphError("membership edges connect a concept to a plane")
            else:
                if ks != "plane" or kd != "plane":
                    raise SceneGraphError(f"{e.kind} edges connect two planes")
            k = e.key()
            if k in seen:
                raise SceneGraphError(f"duplicate undirected edge {k}")
            seen.add(k)

    def plane_ids(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if n.kind == "plane")

    def planes(self) -> dict[int, Plane2D]:
        return {i: self.nodes[i].plane for i in self.plane_ids()}

    def edges_of_kind(self, kind: str) -> list[Edge]:
        return [e for e in self.edges if e.kind == kind]

    def add_plane(self, node_id: int, plane: Plane2D):
        self.nodes[node_id] = Node(kind="plane", plane=plane)

    def add_concept(self, node_id: int, kind: str, origin: Origin2D):
        self.nodes[node_id] = Node(kind=kind, origin=origin)

    def add_edge(self, src: int, dst: int, kind: str, attr: EdgeAttr | None = None,
                 score: float | None = None):
        self.edges.append(Edge(src=src, dst=dst, kind=kind, attr=attr, score=score))


def _edge_attr(a: Plane2D, b: Plane2D) -> EdgeAttr:
    """Attributes for the canonical orientation (a = lower id)."""
    d = float(np.linalg.norm(a.centroid - b.centroid))
    a0, a1 = a.endpoints()
    b0, b1 = b.endpoints()
    med = min(float(np.linalg.norm(p - q))
              for p in (a0, a1) for q in (b0, b1))
    ndot = float(a.normal @ b.normal)
    angle = math.acos(min(1.0, max(-1.0, ndot)))
    return EdgeAttr(centroid_dist=d, min_endpoint_dist=med, normal_dot=ndot,
                    relative_angle=angle,
                    centroid_offset_along_normal=b.signed_distance(a.centroid))


def build_proximity_graph(planes, k: int) -> SceneGraph:
    """k-nearest-neighbor graph over plane centroids, symmetrized.

    ``planes`` is a mapping id -> Plane2D or a sequence (ids 0..n-1).
    Neighbor ties at equal distance break toward the lower node id.
    """
    if k < 1:
        raise SceneGraphError("k must be >= 1")
    if not isinstance(planes, dict):
        planes = dict(enumerate(planes))
    ids = sorted(planes)
    n = len(ids)
    if n < 2:
        raise InsufficientPlanesError(f"need at least 2 planes, got {n}")
    cents = np.array([planes[i].centroid for i in ids])
    d2 = np.sum((cents[:, None, :] - cents[None, :, :]) ** 2, axis=2)
    k_eff = min(k, n - 1)
    pairs: set[tuple[int, int]] = set()
    for row in range(n):
        order = sorted((d2[row, col], col) for col in range(n) if col != row)
        for _, col in order[:k_eff]:
            a, b = ids[row], ids[col]
            pairs.add((a, b) if a < b else (b, a))
    g = SceneGraph()
    for i in ids:
        g.add_plane(i, planes[i])
    for lo, hi in sorted(pairs):
        g.edges.append(Edge(src=lo, dst=hi, kind="proximity",
                            attr=_edge_attr(planes[lo], planes[hi])))
    g.validate()
    return g


def local_frame(planes: dict[int, Plane2D]) -> np.ndarray:
    """Reference point of the local feature frame: bounding-box center of the
    plane centroids. Chosen over the mean because (min+max)/2 commutes exactly
    with exactly-representable translations, keeping local features bitwise
    translation-invariant."""
    cents = np.array([planes[i].centroid for i in sorted(planes)])
    return 0.5 * (cents.min(axis=0) + cents.max(axis=0))


def localize_features(graph: SceneGraph) -> dict[int, NodeFeature]:
    """Per-plane features expressed relative to the subgraph frame."""
    planes = graph.planes()
    if not planes:
        raise SceneGraphError("graph has no plane nodes")
    ref = local_frame(planes)
    out = {}
    for i in sorted(planes):
        p = planes[i]
        out[i] = NodeFeature(
            normal=p.normal.copy(),
            offset_residual=float(snap(p.offset + p.normal @ ref)),
            centroid_local=snap(p.centroid - ref),
            length=p.length,
        )
    return out


def node_feature_matrix(graph: SceneGraph) -> tuple[np.ndarray, list[int]]:
    feats = localize_features(graph)
    ids = sorted(feats)
    return np.array([feats[i].as_array() for i in ids]), ids


def edge_feature_matrix(graph: SceneGraph, kind: str = "proximity") -> tuple[np.ndarray, list[Edge]]:
    """Symmetric per-edge feature rows for the classifier: the four symmetric
    EdgeAttr scalars plus the sorted pair of directed centroid offsets (the
    sign pattern separates back-to-back wall planes from facing room planes)."""
    planes = graph.planes()
    edges = graph.edges_of_kind(kind)
    rows = []
    for e in edges:
        a, b = planes[e.src], planes[e.dst]
        attr = e.attr if e.attr is not None else _edge_attr(a, b)
        off_ab = b.signed_distance(a.centroid)
        off_ba = a.signed_distance(b.centroid)
        lo, hi = (off_ab, off_ba) if off_ab <= off_ba else (off_ba, off_ab)
        rows.append([attr.centroid_dist, attr.min_endpoint_dist, attr.normal_dot,
                     attr.relative_angle, lo, hi])
    if not rows:
        return np.zeros((0, 6)), edges
    return snap(np.array(rows)), edges
