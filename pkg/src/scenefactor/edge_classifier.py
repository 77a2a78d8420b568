"""Edge classifier: two message-passing hops plus a dense decoder that sorts
every proximity edge into none / same_room / same_wall."""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .checkpoint import load_checkpoint, save_checkpoint
from .estimator import BaseEstimator, check_is_fitted, check_planes, check_random_state
from .generator import BuildingSample
from .graphs import (
    EDGE_CLASSES,
    SceneGraph,
    build_proximity_graph,
    edge_feature_matrix,
    node_feature_matrix,
)
from .layers import (
    MessagePassingLayer,
    Mlp,
    canonical_edge_order,
    init_mlp,
    node_content_rank,
)
from .optim import Adam

NODE_IN = 6
EDGE_IN = 6
N_CLASSES = 3


class FeatureLayoutError(ValueError):
    pass


class EmptyDatasetError(ValueError):
    pass


class GGnnModel:
    """Weights of the edge classifier."""

    def __init__(self, mp_layers: list[MessagePassingLayer], decoder: Mlp,
                 hidden: int):
        self.mp_layers = mp_layers
        self.decoder = decoder
        self.hidden = hidden
        self.feature_config = {"node_in": NODE_IN, "edge_in": EDGE_IN,
                               "classes": list(EDGE_CLASSES)}

    @classmethod
    def create(cls, rng: np.random.Generator, hidden: int = 64) -> "GGnnModel":
        h = hidden
        mp1 = MessagePassingLayer(
            msg_mlp=init_mlp([2 * NODE_IN + EDGE_IN, h, h], rng),
            node_mlp=init_mlp([NODE_IN + h, h], rng),
            edge_mlp=init_mlp([EDGE_IN + h, h], rng),
        )
        mp2 = MessagePassingLayer(
            msg_mlp=init_mlp([3 * h, h, h], rng),
            node_mlp=init_mlp([2 * h, h], rng),
            edge_mlp=init_mlp([2 * h, h], rng),
        )
        decoder = init_mlp([h, h, h, N_CLASSES], rng, final_scale=0.1)
        return cls([mp1, mp2], decoder, hidden)

    def params(self):
        out = []
        for mp in self.mp_layers:
            out += mp.params()
        return out + self.decoder.params()

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {f"p{i}": p.data.copy() for i, p in enumerate(self.params())}

    def load_state(self, arrays: dict[str, np.ndarray]):
        params = self.params()
        if len(arrays) != len(params):
            raise FeatureLayoutError("checkpoint parameter count mismatch")
        for i, p in enumerate(params):
            a = arrays[f"p{i}"]
            if a.shape != p.data.shape:
                raise FeatureLayoutError(f"parameter {i} shape {a.shape} != {p.data.shape}")
            p.data = a.astype(np.float64).copy()

    def save(self, path):
        save_checkpoint(path, {"model": "ggnn", "hidden": self.hidden,
                               "feature_config": self.feature_config},
                        self.state_arrays())

    @classmethod
    def load(cls, path) -> "GGnnModel":
        meta, arrays = load_checkpoint(path)
        if meta.get("model") != "ggnn":
            raise FeatureLayoutError(f"checkpoint is a {meta.get('model')!r} model, expected ggnn")
        model = cls.create(np.random.default_rng(0), hidden=int(meta["hidden"]))
        model.load_state(arrays)
        return model


@dataclass
class GraphTensors:
    """Precomputed arrays for one proximity graph."""

    node_feats: np.ndarray
    edge_feats: np.ndarray
    src_sorted: np.ndarray
    dst_sorted: np.ndarray
    eidx_sorted: np.ndarray
    n_nodes: int
    edge_keys: list[tuple[int, int]]
    labels: np.ndarray | None = None


def graph_tensors(graph: SceneGraph, labels: np.ndarray | None = None) -> GraphTensors:
    nf, ids = node_feature_matrix(graph)
    ef, edges = edge_feature_matrix(graph)
    pos = {nid: i for i, nid in enumerate(ids)}
    lo = np.array([pos[e.src] for e in edges], dtype=np.intp)
    hi = np.array([pos[e.dst] for e in edges], dtype=np.intp)
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    eidx = np.concatenate([np.arange(len(edges)), np.arange(len(edges))]).astype(np.intp)
    rank = node_content_rank(nf)
    order = canonical_edge_order(rank, src, dst, ef, eidx)
    return GraphTensors(node_feats=nf, edge_feats=ef,
                        src_sorted=src[order], dst_sorted=dst[order],
                        eidx_sorted=eidx[order], n_nodes=len(ids),
                        edge_keys=[(e.src, e.dst) for e in edges],
                        labels=labels)


def forward_logits(model: GGnnModel, gt: GraphTensors) -> Tensor:
    if gt.node_feats.shape[1] != model.feature_config["node_in"] or \
            gt.edge_feats.shape[1] != model.feature_config["edge_in"]:
        raise FeatureLayoutError("feature layout does not match the model")
    x = Tensor(gt.node_feats)
    e = Tensor(gt.edge_feats)
    for mp in model.mp_layers:
        x, e = mp.forward(x, e, gt.src_sorted, gt.dst_sorted, gt.n_nodes,
                          edge_index=gt.eidx_sorted)
    return model.decoder.forward(e)


def classify_edges(model: GGnnModel, graph: SceneGraph) -> dict[tuple[int, int], tuple[str, np.ndarray]]:
    """Class and probability triple per undirected proximity edge.

    Argmax ties break toward none (class index 0 wins ties)."""
    gt = graph_tensors(graph)
    if not gt.edge_keys:
        return {}
    logits = forward_logits(model, gt).data
    probs = ad.softmax(logits)
    out = {}
    for i, key in enumerate(gt.edge_keys):
        cls = int(np.argmax(probs[i]))
        out[key] = (EDGE_CLASSES[cls], probs[i])
    return out


def edge_labels(sample: BuildingSample, graph: SceneGraph) -> np.ndarray:
    """Ground-truth class per proximity edge; same_wall wins over same_room."""
    room_of = sample.room_of_plane()
    wall_of = sample.wall_of_plane()
    labels = []
    for e in graph.edges_of_kind("proximity"):
        a = sample.provenance[e.src]
        b = sample.provenance[e.dst]
        if wall_of.get(a) is not None and wall_of.get(a) == wall_of.get(b):
            labels.append(2)
        elif room_of.get(a) is not None and room_of.get(a) == room_of.get(b):
            labels.append(1)
        else:
            labels.append(0)
    return np.array(labels, dtype=np.intp)


def prepare_training_graph(sample: BuildingSample, k: int) -> GraphTensors | None:
    if len(sample.observed) < 2:
        return None
    graph = build_proximity_graph(sample.observed, k)
    return graph_tensors(graph, labels=edge_labels(sample, graph))


def class_weights(graphs: list[GraphTensors]) -> np.ndarray:
    """Inverse-frequency class weights, normalized to mean one."""
    counts = np.zeros(N_CLASSES)
    for g in graphs:
        counts += np.bincount(g.labels, minlength=N_CLASSES)
    w = np.where(counts > 0, 1.0 / np.maximum(counts, 1.0), 0.0)
    w *= N_CLASSES / w.sum() if w.sum() > 0 else 1.0
    return w / w.mean()


@dataclass
class TrainingReport:
    train_loss: list[float]
    val_loss: list[float]
    best_epoch: int
    class_weights: np.ndarray | None = None


def train_edge_classifier(samples, cfg: dict | None = None,
                          rng=None) -> tuple[GGnnModel, TrainingReport]:
    """Train on a list of BuildingSamples; returns the model with the best
    validation loss."""
    cfg = dict(cfg or {})
    rng = check_random_state(rng)
    k = int(cfg.get("knn_k", 10))
    graphs = [g for g in (prepare_training_graph(s, k) for s in samples) if g is not None]
    if not graphs:
        raise EmptyDatasetError("no usable training samples")
    val_fraction = float(cfg.get("val_fraction", 0.1))
    n_val = max(1, int(round(val_fraction * len(graphs)))) if len(graphs) > 1 else 0
    perm = rng.permutation(len(graphs))
    val = [graphs[i] for i in perm[:n_val]]
    train = [graphs[i] for i in perm[n_val:]]
    if not train:
        train, val = graphs, []
    weights = class_weights(train) if cfg.get("class_weighting", True) else None
    model = GGnnModel.create(rng, hidden=int(cfg.get("hidden", 64)))
    opt = Adam(model.params(), lr=float(cfg.get("lr", 1e-3)))
    batch = int(cfg.get("batch_size", 16))
    epochs = int(cfg.get("epochs", 60))
    patience = int(cfg.get("patience", 15))

    def dataset_loss(gs):
        tot, n = 0.0, 0
        for g in gs:
            loss = ad.cross_entropy(forward_logits(model, g), g.labels, weights)
            tot += float(loss.data)
            n += 1
        return tot / max(n, 1)

    report = TrainingReport(train_loss=[], val_loss=[], best_epoch=0,
                            class_weights=weights)
    best = (np.inf, None)
    since_best = 0
    for epoch in range(epochs):
        order = rng.permutation(len(train))
        epoch_loss = 0.0
        for start in range(0, len(order), batch):
            idx = sorted(order[start:start + batch])
            opt.zero_grad()
            for gi in idx:
                g = train[gi]
                loss = ad.cross_entropy(forward_logits(model, g), g.labels, weights)
                ad.backward(loss, seed=1.0 / len(idx))
                epoch_loss += float(loss.data)
            opt.step()
        report.train_loss.append(epoch_loss / max(len(train), 1))
        vl = dataset_loss(val) if val else report.train_loss[-1]
        report.val_loss.append(vl)
        if vl < best[0]:
            best = (vl, copy.deepcopy(model.state_arrays()))
            report.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= patience:
                break
    if best[1] is not None:
        model.load_state(best[1])
    return model, report


class EdgeClassifierGNN(BaseEstimator):
    """sklearn-style wrapper around the edge classifier."""

    def __init__(self, hidden=64, lr=1e-3, batch_size=16, epochs=60,
                 patience=15, val_fraction=0.1, knn_k=10,
                 class_weighting=True, random_state=0):
        self.hidden = hidden
        self.lr = lr
        self.batch_size = batch_size
        self.epochs = epochs
        self.patience = patience
        self.val_fraction = val_fraction
        self.knn_k = knn_k
        self.class_weighting = class_weighting
        self.random_state = random_state
        self.model_ = None
        self.report_ = None

    def fit(self, samples, y=None):
        cfg = self.get_params()
        seed = cfg.pop("random_state")
        self.model_, self.report_ = train_edge_classifier(
            samples, cfg, rng=np.random.default_rng(seed))
        return self

    def predict_proba(self, planes):
        check_is_fitted(self, "model_")
        planes = check_planes(planes, min_planes=2)
        graph = build_proximity_graph(planes, self.knn_k)
        return classify_edges(self.model_, graph)

    def predict(self, planes):
        return {key: cls for key, (cls, _) in self.predict_proba(planes).items()}
