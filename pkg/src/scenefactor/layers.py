"""Dense and message-passing layers built on the autodiff tape."""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


class ShapeError(ValueError):
    pass


class Dense:
    """Fully-connected layer: activation(x W^T + b)."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray, activation: str = "identity"):
        if activation not in ("relu", "identity"):
            raise ShapeError(f"unknown activation {activation!r}")
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weights.ndim != 2 or bias.shape != (weights.shape[0],):
            raise ShapeError(f"inconsistent layer shapes {weights.shape} / {bias.shape}")
        self.W = Tensor(weights, requires_grad=True)
        self.b = Tensor(bias, requires_grad=True)
        self.activation = activation

    @property
    def in_dim(self):
        return self.W.data.shape[1]

    @property
    def out_dim(self):
        return self.W.data.shape[0]

    def forward(self, x: Tensor) -> Tensor:
        if x.data.shape[-1] != self.in_dim:
            raise ShapeError(f"dense expects {self.in_dim} inputs, got {x.data.shape[-1]}")
        vec = x.data.ndim == 1
        if vec:
            x = _promote_row(x)
        y = ad.add(ad.matmul(x, _transpose(self.W)), self.b)
        if self.activation == "relu":
            y = ad.relu(y)
        return _take_row0(y) if vec else y

    def params(self):
        return [self.W, self.b]


def _promote_row(t: Tensor) -> Tensor:
    out = Tensor(t.data[None, :], parents=(t,), requires_grad=t.requires_grad)
    if t.requires_grad:
        out._backward = lambda g: t._accum(g[0])
    return out


def _take_row0(t: Tensor) -> Tensor:
    out = Tensor(t.data[0], parents=(t,), requires_grad=t.requires_grad)
    if t.requires_grad:
        out._backward = lambda g: t._accum(g[None, :])
    return out


def _transpose(t: Tensor) -> Tensor:
    out = Tensor(t.data.T, parents=(t,), requires_grad=t.requires_grad)

    def bw(g):
        t._accum(g.T)

    out._backward = bw if t.requires_grad else None
    return out


class Mlp:
    """Stack of Dense layers."""

    def __init__(self, layers: list[Dense]):
        self.layers = layers

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1].out_dim

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def params(self):
        return [p for layer in self.layers for p in layer.params()]


def init_dense(in_dim: int, out_dim: int, rng: np.random.Generator,
               activation: str = "identity", scale: float = 1.0) -> Dense:
    # symmetric uniform init, a = sqrt(6 / (in + out)); bias zero
    a = scale * np.sqrt(6.0 / (in_dim + out_dim))
    W = rng.uniform(-a, a, size=(out_dim, in_dim))
    return Dense(W, np.zeros(out_dim), activation=activation)


def init_mlp(sizes: list[int], rng: np.random.Generator,
             final_scale: float = 1.0) -> Mlp:
    """relu MLP over ``sizes``; final layer linear with a damped init so an
    untrained network emits near-zero outputs."""
    layers = []
    for i in range(len(sizes) - 1):
        last = i == len(sizes) - 2
        layers.append(init_dense(sizes[i], sizes[i + 1], rng,
                                 activation="identity" if last else "relu",
                                 scale=final_scale if last else 1.0))
    return Mlp(layers)


class MessagePassingLayer:
    """One message-passing hop with mean aggregation.

    Messages run over a directed edge list; incoming messages are summed in a
    caller-supplied canonical row order before dividing by degree, which keeps
    the hop bitwise permutation-equivariant. The optional edge-update MLP sees
    the (symmetric) sum of the two endpoint embeddings, so undirected edges
    need no canonical orientation.
    """

    def __init__(self, msg_mlp: Mlp, node_mlp: Mlp, edge_mlp: Mlp | None = None):
        self.msg_mlp = msg_mlp
        self.node_mlp = node_mlp
        self.edge_mlp = edge_mlp

    def forward(self, x_nodes: Tensor, x_edges: Tensor | None,
                src: np.ndarray, dst: np.ndarray, n_nodes: int,
                edge_index: np.ndarray | None = None):
        """src/dst index directed edges, pre-sorted so dst is ascending;
        edge_index maps each directed edge to its undirected feature row."""
        parts = [ad.gather_rows(x_nodes, src), ad.gather_rows(x_nodes, dst)]
        if x_edges is not None:
            parts.append(ad.gather_rows(x_edges, edge_index))
        if len(src):
            msgs = self.msg_mlp.forward(ad.concat_cols(parts))
            agg = ad.segment_mean(msgs, dst, n_nodes)
        else:
            agg = Tensor(np.zeros((n_nodes, self.msg_mlp.out_dim)))
        x_new = self.node_mlp.forward(ad.concat_cols([x_nodes, agg]))
        e_new = None
        if self.edge_mlp is not None and x_edges is not None:
            lo, hi = _undirected_endpoints(src, dst, edge_index)
            end_sum = ad.add(ad.gather_rows(x_new, lo), ad.gather_rows(x_new, hi))
            e_new = self.edge_mlp.forward(ad.concat_cols([x_edges, end_sum]))
        return x_new, e_new

    def params(self):
        out = self.msg_mlp.params() + self.node_mlp.params()
        if self.edge_mlp is not None:
            out += self.edge_mlp.params()
        return out


def _undirected_endpoints(src, dst, edge_index):
    n_undirected = int(edge_index.max()) + 1 if len(edge_index) else 0
    lo = np.zeros(n_undirected, dtype=np.intp)
    hi = np.zeros(n_undirected, dtype=np.intp)
    seen = np.zeros(n_undirected, dtype=bool)
    for s, d, e in zip(src, dst, edge_index):
        if not seen[e]:
            lo[e], hi[e] = min(s, d), max(s, d)
            seen[e] = True
    return lo, hi


def canonical_edge_order(node_rank: np.ndarray, src: np.ndarray, dst: np.ndarray,
                         edge_feats: np.ndarray | None = None,
                         edge_index: np.ndarray | None = None) -> np.ndarray:
    """Row order for directed edges: ascending dst (as segment_mean needs),
    and within each destination ascending source content rank, so per-node
    summation order is a function of node content, not labeling. Edge
    features break ties between identical source nodes."""
    keys: list[np.ndarray] = []
    if edge_feats is not None and edge_index is not None and len(edge_index):
        ef = edge_feats[edge_index]
        keys.extend(ef[:, c] for c in reversed(range(ef.shape[1])))
    keys.append(node_rank[src])
    keys.append(dst)
    return np.lexsort(tuple(keys))


def node_content_rank(features: np.ndarray) -> np.ndarray:
    """Rank nodes by lexicographic order of their feature rows."""
    keys = tuple(features[:, c] for c in reversed(range(features.shape[1])))
    order = np.lexsort(keys)
    rank = np.empty(len(order), dtype=np.intp)
    rank[order] = np.arange(len(order))
    return rank
