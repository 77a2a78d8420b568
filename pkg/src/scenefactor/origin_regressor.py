"""Origin regressors: one star-shaped message-passing hop from a concept's
member planes into a virtual concept node, then a dense decoder emitting the
(x, y) origin. Two weight sets share the architecture, one for rooms and one
for walls. The same network doubles as the factor function inside the
nonlinear least-squares problem, where its inputs are differentiable plane
parameters rather than fixed features.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .checkpoint import load_checkpoint, save_checkpoint
from .estimator import BaseEstimator, check_is_fitted, check_planes, check_random_state
from .generator import BuildingSample
from .geometry import Origin2D, Plane2D
from .graphs import snap
from .layers import Mlp, init_mlp
from .optim import Adam

PLANE_IN = 6


class ArityError(ValueError):
    pass


class EmptyDatasetError(ValueError):
    pass


class FGnnModel:
    def __init__(self, kind: str, msg_mlp: Mlp, node_mlp: Mlp, decoder: Mlp,
                 hidden: int):
        if kind not in ("room", "wall"):
            raise ValueError(f"unknown concept kind {kind!r}")
        self.kind = kind
        self.msg_mlp = msg_mlp
        self.node_mlp = node_mlp
        self.decoder = decoder
        self.hidden = hidden
        self.feature_config = {"plane_in": PLANE_IN}

    @classmethod
    def create(cls, kind: str, rng: np.random.Generator, hidden: int = 64) -> "FGnnModel":
        h = hidden
        return cls(kind,
                   msg_mlp=init_mlp([PLANE_IN, h, h], rng),
                   node_mlp=init_mlp([PLANE_IN + h, h], rng),
                   decoder=init_mlp([h, h, h, 2], rng, final_scale=0.1),
                   hidden=h)

    def params(self):
        return self.msg_mlp.params() + self.node_mlp.params() + self.decoder.params()

    def freeze(self):
        """Stop tracking weight gradients (factor evaluation only needs input
        gradients)."""
        for p in self.params():
            p.requires_grad = False
        return self

    def state_arrays(self):
        return {f"p{i}": p.data.copy() for i, p in enumerate(self.params())}

    def load_state(self, arrays):
        params = self.params()
        for i, p in enumerate(params):
            a = arrays[f"p{i}"]
            if a.shape != p.data.shape:
                raise ValueError(f"parameter {i} shape {a.shape} != {p.data.shape}")
            p.data = a.astype(np.float64).copy()

    def save(self, path):
        save_checkpoint(path, {"model": "fgnn", "kind": self.kind,
                               "hidden": self.hidden}, self.state_arrays())

    @classmethod
    def load(cls, path) -> "FGnnModel":
        meta, arrays = load_checkpoint(path)
        if meta.get("model") != "fgnn":
            raise ValueError(f"checkpoint is a {meta.get('model')!r} model, expected fgnn")
        model = cls.create(meta["kind"], np.random.default_rng(0),
                           hidden=int(meta["hidden"]))
        model.load_state(arrays)
        return model

    def decode(self, feats: Tensor) -> Tensor:
        """Local-frame origin from a (J x 6) plane feature matrix."""
        msgs = self.msg_mlp.forward(feats)
        agg = ad.mean_rows(msgs)
        concept_in = ad.concat_vec([Tensor(np.zeros(PLANE_IN)), agg])
        emb = self.node_mlp.forward(concept_in)
        return self.decoder.forward(emb)


def _check_arity(model: FGnnModel, n: int):
    if n < 2:
        raise ArityError(f"a {model.kind} needs at least 2 member planes, got {n}")
    if model.kind == "wall" and n != 2:
        raise ArityError(f"a wall has exactly 2 member planes, got {n}")


def plane_features(planes: list[Plane2D], ref: np.ndarray) -> np.ndarray:
    rows = []
    for p in planes:
        rows.append([p.normal[0], p.normal[1],
                     float(snap(p.offset + p.normal @ ref)),
                     *snap(p.centroid - ref).tolist(), p.length])
    return np.array(rows)


def _canonical_rows(feats: np.ndarray) -> np.ndarray:
    order = np.lexsort(tuple(feats[:, c] for c in reversed(range(feats.shape[1]))))
    return feats[order]


def localized_inputs(planes: list[Plane2D]) -> tuple[np.ndarray, np.ndarray]:
    """(canonically ordered feature matrix, frame reference point)."""
    cents = np.array([p.centroid for p in planes])
    ref = 0.5 * (cents.min(axis=0) + cents.max(axis=0))
    return _canonical_rows(plane_features(planes, ref)), ref


def infer_origin(model: FGnnModel, planes: list[Plane2D]) -> Origin2D:
    """Origin of the concept spanned by ``planes``; invariant to the plane
    ordering and equivariant to global translation by construction."""
    planes = list(check_planes(planes, min_planes=2).values())
    _check_arity(model, len(planes))
    feats, ref = localized_inputs(planes)
    local = model.decode(Tensor(feats)).data
    return Origin2D(local + ref)


def factor_forward(model: FGnnModel, theta: Tensor, offset: Tensor,
                   centroids: np.ndarray, lengths: np.ndarray) -> tuple[Tensor, np.ndarray]:
    """Differentiable origin as a function of plane parameters.

    Centroids and lengths are linearization anchors held constant; the local
    frame is therefore constant too, so gradients flow only through the
    normal direction and offset.
    """
    _check_arity(model, len(lengths))
    ref = 0.5 * (centroids.min(axis=0) + centroids.max(axis=0))
    nx, ny = ad.cos(theta), ad.sin(theta)
    off_res = ad.add(offset, ad.add(ad.mul(nx, float(ref[0])),
                                    ad.mul(ny, float(ref[1]))))
    cl = centroids - ref
    feats = ad.concat_cols([nx, ny, off_res, Tensor(cl[:, 0]), Tensor(cl[:, 1]),
                            Tensor(np.asarray(lengths, dtype=np.float64))])
    return model.decode(feats), ref


@dataclass
class TrainingReport:
    train_loss: list[float]
    val_loss: list[float]
    best_epoch: int


def concept_training_set(samples, kind: str) -> list[tuple[list[Plane2D], np.ndarray]]:
    """(noisy member planes, ground-truth origin) pairs for one concept kind."""
    out = []
    for s in samples:
        obs_of = {g: o for o, g in s.provenance.items()}
        concepts = s.rooms if kind == "room" else s.walls
        for c in concepts:
            planes = [s.observed[obs_of[g]] for g in c.plane_ids if g in obs_of]
            if len(planes) >= 2 and (kind == "room" or len(planes) == 2):
                out.append((planes, np.asarray(c.origin, dtype=np.float64)))
    return out


def train_origin_regressor(dataset, kind: str, cfg: dict | None = None,
                           rng=None) -> tuple[FGnnModel, TrainingReport]:
    """dataset: list of (planes, target origin). Trained in the local frame;
    returns the weights with the best validation MSE."""
    cfg = dict(cfg or {})
    rng = check_random_state(rng)
    if not dataset:
        raise EmptyDatasetError("empty origin-regression dataset")
    prepared = []
    for planes, target in dataset:
        feats, ref = localized_inputs(list(planes))
        prepared.append((feats, np.asarray(target, dtype=np.float64) - ref))
    val_fraction = float(cfg.get("val_fraction", 0.1))
    n_val = max(1, int(round(val_fraction * len(prepared)))) if len(prepared) > 1 else 0
    perm = rng.permutation(len(prepared))
    val = [prepared[i] for i in perm[:n_val]]
    train = [prepared[i] for i in perm[n_val:]]
    if not train:
        train, val = prepared, []
    model = FGnnModel.create(kind, rng, hidden=int(cfg.get("hidden", 64)))
    opt = Adam(model.params(), lr=float(cfg.get("lr", 1e-3)))
    batch = int(cfg.get("batch_size", 32))
    epochs = int(cfg.get("epochs", 80))
    patience = int(cfg.get("patience", 15))

    def dataset_loss(ds):
        return float(np.mean([float(ad.mse(model.decode(Tensor(f)), t).data)
                              for f, t in ds])) if ds else np.inf

    report = TrainingReport(train_loss=[], val_loss=[], best_epoch=0)
    best = (np.inf, None)
    since_best = 0
    for epoch in range(epochs):
        order = rng.permutation(len(train))
        epoch_loss = 0.0
        for start in range(0, len(order), batch):
            idx = sorted(order[start:start + batch])
            opt.zero_grad()
            for i in idx:
                feats, target = train[i]
                loss = ad.mse(model.decode(Tensor(feats)), target)
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


class OriginRegressorGNN(BaseEstimator):
    """sklearn-style wrapper around one origin regressor."""

    def __init__(self, kind="room", hidden=64, lr=1e-3, batch_size=32,
                 epochs=80, patience=15, val_fraction=0.1, random_state=0):
        self.kind = kind
        self.hidden = hidden
        self.lr = lr
        self.batch_size = batch_size
        self.epochs = epochs
        self.patience = patience
        self.val_fraction = val_fraction
        self.random_state = random_state
        self.model_ = None
        self.report_ = None

    def fit(self, dataset, y=None):
        cfg = self.get_params()
        seed = cfg.pop("random_state")
        kind = cfg.pop("kind")
        self.model_, self.report_ = train_origin_regressor(
            dataset, kind, cfg, rng=np.random.default_rng(seed))
        return self

    def predict(self, planes) -> Origin2D:
        check_is_fitted(self, "model_")
        return infer_origin(self.model_, list(planes))
