"""JSON-lines schemas for datasets and pipeline artifacts.

One building per line. Floats are serialized with 9 significant digits; plane
normals are re-normalized (and centroids re-projected) on load so the stored
invariants survive the rounding.
"""
from __future__ import annotations

import json

import numpy as np

from .geometry import Origin2D, Plane2D
from .generator import BuildingSample, Room, Wall
from .graphs import Edge, SceneGraph


def round_floats(obj):
    """Recursively round floats to 9 significant digits for serialization."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, (np.floating,)):
        return float(f"{float(obj):.9g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def write_jsonl(path, records):
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(round_floats(rec), sort_keys=True))
            f.write("\n")


def read_jsonl(path):
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def plane_to_record(pid: int, p: Plane2D) -> dict:
    return {"id": pid, "normal": p.normal.tolist(), "offset": p.offset,
            "centroid": p.centroid.tolist(), "length": p.length}


def plane_from_record(rec: dict) -> tuple[int, Plane2D]:
    n = np.asarray(rec["normal"], dtype=np.float64)
    n = n / np.linalg.norm(n)
    c = np.asarray(rec["centroid"], dtype=np.float64)
    d = float(rec["offset"])
    c = c - (float(n @ c) + d) * n  # re-project after rounding
    return int(rec["id"]), Plane2D(normal=n, offset=d, centroid=c,
                                   length=float(rec["length"]))


def sample_to_record(sample: BuildingSample) -> dict:
    edges = []
    for r in sample.rooms:
        for i, a in enumerate(r.plane_ids):
            for b in r.plane_ids[i + 1:]:
                edges.append({"src": min(a, b), "dst": max(a, b), "kind": "same_room"})
    for w in sample.walls:
        a, b = w.plane_ids
        edges.append({"src": min(a, b), "dst": max(a, b), "kind": "same_wall"})
    return {
        "id": sample.rng_seed,
        "planes": [plane_to_record(i, sample.observed[i]) for i in sorted(sample.observed)],
        "gt_planes": [plane_to_record(i, sample.planes[i]) for i in sorted(sample.planes)],
        "rooms": [{"id": r.id, "plane_ids": list(r.plane_ids),
                   "polygon": r.polygon.tolist()} for r in sample.rooms],
        "walls": [{"id": w.id, "plane_ids": list(w.plane_ids)} for w in sample.walls],
        "edges": edges,
        "origins": {str(cid): o for cid, o in
                    [(r.id, r.origin.tolist()) for r in sample.rooms] +
                    [(w.id, w.origin.tolist()) for w in sample.walls]},
        "provenance": {str(o): g for o, g in sorted(sample.provenance.items())},
        "noise_meta": sample.meta,
        "seed": sample.rng_seed,
    }


def sample_from_record(rec: dict) -> BuildingSample:
    observed = dict(plane_from_record(r) for r in rec["planes"])
    planes = dict(plane_from_record(r) for r in rec["gt_planes"])
    origins = {int(k): np.asarray(v, dtype=np.float64) for k, v in rec["origins"].items()}
    rooms = [Room(id=int(r["id"]), plane_ids=[int(p) for p in r["plane_ids"]],
                  polygon=np.asarray(r["polygon"], dtype=np.float64),
                  origin=origins[int(r["id"])])
             for r in rec["rooms"]]
    walls = [Wall(id=int(w["id"]),
                  plane_ids=(int(w["plane_ids"][0]), int(w["plane_ids"][1])),
                  origin=origins[int(w["id"])])
             for w in rec["walls"]]
    return BuildingSample(
        planes=planes, rooms=rooms, walls=walls, observed=observed,
        provenance={int(k): int(v) for k, v in rec["provenance"].items()},
        rng_seed=int(rec["seed"]), meta=dict(rec.get("noise_meta", {})),
    )


def scene_to_record(scene: SceneGraph, scene_id=0) -> dict:
    """Generic scene-graph record (pipeline outputs)."""
    planes = []
    concepts = []
    for nid in sorted(scene.nodes):
        node = scene.nodes[nid]
        if node.kind == "plane":
            planes.append(plane_to_record(nid, node.plane))
        else:
            concepts.append({"id": nid, "kind": node.kind,
                             "origin": node.origin.xy.tolist()})
    edges = []
    for e in scene.edges:
        rec = {"src": e.src, "dst": e.dst, "kind": e.kind}
        if e.score is not None:
            rec["score"] = e.score
        edges.append(rec)
    return {"id": scene_id, "planes": planes, "concepts": concepts, "edges": edges}


def scene_from_record(rec: dict) -> SceneGraph:
    g = SceneGraph()
    for pr in rec["planes"]:
        pid, plane = plane_from_record(pr)
        g.add_plane(pid, plane)
    for cr in rec.get("concepts", []):
        g.add_concept(int(cr["id"]), cr["kind"],
                      Origin2D(np.asarray(cr["origin"], dtype=np.float64)))
    for er in rec.get("edges", []):
        g.edges.append(Edge(src=int(er["src"]), dst=int(er["dst"]),
                            kind=er["kind"], score=er.get("score")))
    g.validate()
    return g
