"""scenefactor: metric-semantic factor graphs from planar segments.

A synthetic building-layout generator produces training data; a learned
edge classifier (G-GNN) and learned origin regressors (F-GNN) turn sets
of observed planes into room/wall concepts with continuous origins; the
same regressors define optimizable factors in a nonlinear least-squares
scene graph solved with Levenberg-Marquardt.
"""

from .clustering import ConceptCluster, cluster_rooms, cluster_walls
from .edge_classifier import EdgeClassifierGNN, GGnnModel
from .factors import (ConceptFactor, FactorProblem, LMConfig, OriginVar,
                      PlanePrior, PlaneVar, optimize)
from .generator import BuildingSample, GeneratorConfig, generate_dataset
from .geometry import Origin2D, Plane2D, PlaneParam
from .graphs import SceneGraph, build_proximity_graph
from .metrics import evaluate_edges, evaluate_origins
from .origin_regressor import FGnnModel, OriginRegressorGNN, infer_origin
from .pipeline import PipelineResult, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "BuildingSample",
    "ConceptCluster",
    "ConceptFactor",
    "EdgeClassifierGNN",
    "FGnnModel",
    "FactorProblem",
    "GGnnModel",
    "GeneratorConfig",
    "LMConfig",
    "Origin2D",
    "OriginRegressorGNN",
    "OriginVar",
    "PipelineResult",
    "Plane2D",
    "PlaneParam",
    "PlanePrior",
    "PlaneVar",
    "SceneGraph",
    "build_proximity_graph",
    "cluster_rooms",
    "cluster_walls",
    "evaluate_edges",
    "evaluate_origins",
    "generate_dataset",
    "infer_origin",
    "optimize",
    "run_pipeline",
]
