"""End-to-end scene graph generation from a set of observed planes.

proximity graph -> edge classification -> concept clustering -> origin
inference -> factor problem construction.  Each stage is timed so the
full pipeline can be profiled with one call.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .clustering import ConceptCluster, cluster_concepts
from .edge_classifier import GGnnModel, classify_edges
from .factors import (ConceptFactor, FactorProblem, OriginVar, PlanePrior,
                      PlaneVar)
from .geometry import Origin2D, plane_to_param
from .graphs import SceneGraph, build_proximity_graph
from .origin_regressor import FGnnModel, infer_origin

__all__ = ["PipelineResult", "run_pipeline", "build_factor_problem",
           "problem_from_scene"]


@dataclass
class PipelineResult:
    """Everything produced by one pipeline run."""

    scene: SceneGraph
    clusters: list[ConceptCluster]
    origins: dict[int, Origin2D]
    concept_of_cluster: dict[int, int]
    problem: FactorProblem
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def total_time(self) -> float:
        return sum(self.timings.values())


def build_factor_problem(planes, clusters, origins, concept_ids,
                         room_model: FGnnModel, wall_model: FGnnModel,
                         prior_information=None) -> FactorProblem:
    """Factor problem over ``planes`` and the clustered concepts.

    Every plane gets a unit-information prior at its observed
    parameters (unless ``prior_information`` overrides it); every
    cluster contributes one learned factor tying its members to its
    origin variable.
    """
    if prior_information is None:
        prior_information = np.eye(2)
    problem = FactorProblem()
    for pid in sorted(planes):
        param = plane_to_param(planes[pid])
        problem.add_plane(PlaneVar(id=pid, param=param))
        problem.add_prior(PlanePrior(plane_id=pid, target=param,
                                     information=prior_information))
    for ci, cluster in enumerate(clusters):
        oid = concept_ids[ci]
        problem.add_origin(OriginVar(id=oid, value=origins[oid].xy))
        model = room_model if cluster.kind == "room" else wall_model
        member_planes = [planes[pid] for pid in cluster.members]
        problem.add_factor(ConceptFactor(
            kind=cluster.kind,
            model=model,
            plane_ids=cluster.members,
            origin_id=oid,
            centroids=np.array([p.centroid for p in member_planes]),
            lengths=np.array([p.length for p in member_planes]),
        ))
    return problem


def problem_from_scene(scene: SceneGraph, room_model: FGnnModel,
                       wall_model: FGnnModel,
                       prior_information=None) -> FactorProblem:
    """Rebuild a factor problem from a serialized scene graph.

    Concept membership edges define the factors; origins seed the
    origin variables; every plane gets a prior at its current
    parameters.
    """
    planes = scene.planes()
    members: dict[int, list[int]] = {}
    for e in scene.edges_of_kind("membership"):
        members.setdefault(e.src, []).append(e.dst)
    clusters, origins, concept_ids = [], {}, {}
    for ci, oid in enumerate(sorted(members)):
        node = scene.nodes[oid]
        clusters.append(ConceptCluster(
            kind=node.kind, members=tuple(sorted(members[oid])), score=1.0))
        origins[oid] = node.origin
        concept_ids[ci] = oid
    return build_factor_problem(planes, clusters, origins, concept_ids,
                                room_model, wall_model,
                                prior_information=prior_information)


def run_pipeline(planes, g_model: GGnnModel, room_model: FGnnModel,
                 wall_model: FGnnModel, k: int = 10) -> PipelineResult:
    """Generate a metric-semantic scene graph from observed planes.

    Parameters
    ----------
    planes : dict of int -> Plane2D
        Observed planes keyed by node id.
    g_model : GGnnModel
        Trained edge classifier.
    room_model, wall_model : FGnnModel
        Trained origin regressors; also embedded in the factors.
    k : int
        Proximity-graph neighbor count.

    Returns
    -------
    PipelineResult
    """
    if not isinstance(planes, dict):
        planes = dict(enumerate(planes))
    timings = {}

    if len(planes) < 2:
        # Too few planes for a proximity graph: emit the planes and an
        # empty (but prior-anchored) factor problem.
        scene = SceneGraph()
        for pid in sorted(planes):
            scene.add_plane(pid, planes[pid])
        scene.validate()
        problem = build_factor_problem(planes, [], {}, {},
                                       room_model, wall_model)
        return PipelineResult(scene=scene, clusters=[], origins={},
                              concept_of_cluster={}, problem=problem,
                              timings={})

    t0 = time.perf_counter()
    graph = build_proximity_graph(planes, k)
    timings["proximity"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    classified = classify_edges(g_model, graph)
    timings["classify"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    triples = [(pair, label, float(proba[("none", "same_room", "same_wall").index(label)]))
               for pair, (label, proba) in classified.items()]
    rooms, walls = cluster_concepts(triples)
    clusters = rooms + walls
    timings["cluster"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    next_id = max(planes) + 1
    origins: dict[int, Origin2D] = {}
    concept_ids: dict[int, int] = {}
    for ci, cluster in enumerate(clusters):
        model = room_model if cluster.kind == "room" else wall_model
        oid = next_id + ci
        concept_ids[ci] = oid
        origins[oid] = infer_origin(model, [planes[p] for p in cluster.members])
    timings["origins"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    scene = SceneGraph()
    for pid in sorted(planes):
        scene.add_plane(pid, planes[pid])
    for pair, (label, proba) in sorted(classified.items()):
        if label == "none":
            continue
        cls = ("none", "same_room", "same_wall").index(label)
        scene.add_edge(pair[0], pair[1], label, score=float(proba[cls]))
    for ci, cluster in enumerate(clusters):
        oid = concept_ids[ci]
        scene.add_concept(oid, cluster.kind, origins[oid])
        for pid in cluster.members:
            scene.add_edge(oid, pid, "membership")
    scene.validate()
    problem = build_factor_problem(planes, clusters, origins, concept_ids,
                                   room_model, wall_model)
    timings["assemble"] = time.perf_counter() - t0

    return PipelineResult(scene=scene, clusters=clusters, origins=origins,
                          concept_of_cluster=concept_ids, problem=problem,
                          timings=timings)
