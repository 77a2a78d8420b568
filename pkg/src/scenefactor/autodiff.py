"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough vectorized ops for the two GNNs: dense layers, message passing,
the losses, and the trig needed to differentiate through plane parameters
when a network doubles as a factor function. Everything is float64 and
single-threaded; the backward pass visits the recorded graph in reverse
topological order exactly once.
"""
from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g


def _as_const(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def backward(root: Tensor, seed=None):
    """Reverse accumulation from ``root``; seed defaults to ones."""
    topo: list[Tensor] = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    # Interior grads must start fresh each pass (leaf grads accumulate
    # across passes, which batch accumulation relies on).
    for node in topo:
        if node._backward is not None:
            node.grad = None
    root.grad = np.ones_like(root.data) if seed is None else np.asarray(seed, dtype=np.float64)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_const(a), _as_const(b)
    out_data = a.data @ b.data

    def bw(g):
        if a.requires_grad:
            a._accum(g @ b.data.T)
        if b.requires_grad:
            b._accum(a.data.T @ g)

    return Tensor(out_data, parents=(a, b), backward=bw)


def add(a: Tensor, b) -> Tensor:
    # supports broadcasting a row vector (bias) over rows
    a, b = _as_const(a), _as_const(b)
    out_data = a.data + b.data

    def _unbroadcast(g, shape):
        if g.shape == shape:
            return g
        if len(shape) < g.ndim:
            g = g.sum(axis=tuple(range(g.ndim - len(shape))))
        for ax, n in enumerate(shape):
            if n == 1 and g.shape[ax] != 1:
                g = g.sum(axis=ax, keepdims=True)
        return g

    def bw(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=bw)


def sub(a: Tensor, b) -> Tensor:
    return add(a, mul(b, -1.0))


def mul(a: Tensor, b) -> Tensor:
    a, b = _as_const(a), _as_const(b)
    out_data = a.data * b.data

    def _unbroadcast(g, shape):
        if g.shape == shape:
            return g
        if len(shape) < g.ndim:
            g = g.sum(axis=tuple(range(g.ndim - len(shape))))
        for ax, n in enumerate(shape):
            if n == 1 and g.shape[ax] != 1:
                g = g.sum(axis=ax, keepdims=True)
        return g

    def bw(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * a.data, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=bw)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0.0
    out_data = np.where(mask, a.data, 0.0)

    def bw(g):
        if a.requires_grad:
            a._accum(g * mask)

    return Tensor(out_data, parents=(a,), backward=bw)


def cos(a: Tensor) -> Tensor:
    out_data = np.cos(a.data)

    def bw(g):
        if a.requires_grad:
            a._accum(-g * np.sin(a.data))

    return Tensor(out_data, parents=(a,), backward=bw)


def sin(a: Tensor) -> Tensor:
    out_data = np.sin(a.data)

    def bw(g):
        if a.requires_grad:
            a._accum(g * np.cos(a.data))

    return Tensor(out_data, parents=(a,), backward=bw)


def concat_cols(parts: list[Tensor]) -> Tensor:
    parts = [_as_const(p) for p in parts]
    datas = [p.data if p.data.ndim == 2 else p.data[:, None] for p in parts]
    out_data = np.concatenate(datas, axis=1)
    widths = [d.shape[1] for d in datas]

    def bw(g):
        col = 0
        for p, w in zip(parts, widths):
            if p.requires_grad:
                piece = g[:, col:col + w]
                p._accum(piece if p.data.ndim == 2 else piece[:, 0])
            col += w

    return Tensor(out_data, parents=tuple(parts), backward=bw)


def concat_vec(parts: list[Tensor]) -> Tensor:
    parts = [_as_const(p) for p in parts]
    out_data = np.concatenate([p.data.ravel() for p in parts])
    sizes = [p.data.size for p in parts]

    def bw(g):
        pos = 0
        for p, s in zip(parts, sizes):
            if p.requires_grad:
                p._accum(g[pos:pos + s].reshape(p.data.shape))
            pos += s

    return Tensor(out_data, parents=tuple(parts), backward=bw)


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx, dtype=np.intp)
    out_data = a.data[idx]

    def bw(g):
        if a.requires_grad:
            acc = np.zeros_like(a.data)
            np.add.at(acc, idx, g)
            a._accum(acc)

    return Tensor(out_data, parents=(a,), backward=bw)


def segment_mean(msgs: Tensor, dst_sorted: np.ndarray, n_segments: int) -> Tensor:
    """Mean of message rows per destination segment.

    ``dst_sorted`` must be ascending; callers pre-sort rows into a canonical
    order so the per-segment summation order is reproducible under node
    relabeling. Empty segments yield a zero row.
    """
    dst_sorted = np.asarray(dst_sorted, dtype=np.intp)
    counts = np.bincount(dst_sorted, minlength=n_segments).astype(np.float64)
    sums = np.zeros((n_segments, msgs.data.shape[1]))
    if len(dst_sorted):
        starts = np.searchsorted(dst_sorted, np.arange(n_segments))
        red = np.add.reduceat(msgs.data, starts, axis=0)
        nonempty = counts > 0
        sums[nonempty] = red[nonempty]
    denom = np.maximum(counts, 1.0)[:, None]
    out_data = sums / denom

    def bw(g):
        if msgs.requires_grad:
            msgs._accum(g[dst_sorted] / denom[dst_sorted])

    return Tensor(out_data, parents=(msgs,), backward=bw)


def mean_rows(a: Tensor) -> Tensor:
    """Column-wise mean over rows (1 x C output kept 1-D)."""
    n = a.data.shape[0]
    out_data = a.data.sum(axis=0) / n

    def bw(g):
        if a.requires_grad:
            a._accum(np.broadcast_to(g / n, a.data.shape).copy())

    return Tensor(out_data, parents=(a,), backward=bw)


def sum_all(a: Tensor) -> Tensor:
    out_data = np.array(a.data.sum())

    def bw(g):
        if a.requires_grad:
            a._accum(np.full_like(a.data, float(g)))

    return Tensor(out_data, parents=(a,), backward=bw)


def square(a: Tensor) -> Tensor:
    out_data = a.data ** 2

    def bw(g):
        if a.requires_grad:
            a._accum(g * 2.0 * a.data)

    return Tensor(out_data, parents=(a,), backward=bw)


def mse(pred: Tensor, target) -> Tensor:
    """Mean of squared component errors."""
    target = np.asarray(target, dtype=np.float64)
    diff = pred.data - target
    out_data = np.array(np.mean(diff ** 2))
    n = diff.size

    def bw(g):
        if pred.requires_grad:
            pred._accum(float(g) * 2.0 * diff / n)

    return Tensor(out_data, parents=(pred,), backward=bw)


def cross_entropy(logits: Tensor, labels: np.ndarray, class_weights=None) -> Tensor:
    """Weighted softmax cross entropy, normalized by the total sample weight.

    With per-class weights normalized to mean one, a uniform prediction still
    scores ln(n_classes).
    """
    labels = np.asarray(labels, dtype=np.intp)
    z = logits.data
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    sez = ez.sum(axis=1, keepdims=True)
    logp = (z - zmax) - np.log(sez)
    n = len(labels)
    if class_weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(class_weights, dtype=np.float64)[labels]
    wsum = w.sum()
    losses = -logp[np.arange(n), labels]
    out_data = np.array(float((w * losses).sum() / wsum))

    def bw(g):
        if logits.requires_grad:
            probs = ez / sez
            grad = probs * (w / wsum)[:, None]
            grad[np.arange(n), labels] -= w / wsum
            logits._accum(float(g) * grad)

    return Tensor(out_data, parents=(logits,), backward=bw)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=-1, keepdims=True)
