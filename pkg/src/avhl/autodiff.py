"""Minimal reverse-mode autodiff over dense 2-D float64 arrays.

Just enough machinery for the highlight network: linear layers, single-head
scaled dot-product attention with a residual connection, sigmoid, relu,
softmax, a gated weighted sum of streams, and binary cross-entropy.

A fresh graph is built on every forward pass; parameters are persistent leaf
tensors. ``backward`` overwrites (never accumulates across calls) the ``grad``
buffer of every node it reaches.
"""

from __future__ import annotations

import math

import numpy as np

SIGMOID_CLAMP = 1e-7  # scores are clamped to [eps, 1-eps] before BCE


class Tensor:
    """A 2-D array node in the autodiff graph."""

    __slots__ = ("data", "grad", "parents", "_backward", "name")

    def __init__(self, data, parents=(), backward=None, name=None):
        self.data = np.atleast_2d(np.asarray(data, dtype=np.float64))
        self.grad: np.ndarray | None = None
        self.parents = parents
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, name={self.name})"


def leaf(data, name=None) -> Tensor:
    return Tensor(data, name=name)


def _node(data, parents, backward) -> Tensor:
    return Tensor(data, parents=parents, backward=backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out = _node(a.data @ b.data, (a, b), None)

    def backward():
        a.grad += out.grad @ b.data.T
        b.grad += a.data.T @ out.grad
    out._backward = backward
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; b may be a (1, d) bias broadcast over a's rows."""
    if a.shape != b.shape and not (b.shape[0] == 1 and b.shape[1] == a.shape[1]):
        raise ValueError(f"add shape mismatch: {a.shape} + {b.shape}")
    out = _node(a.data + b.data, (a, b), None)

    def backward():
        a.grad += out.grad
        if b.shape == a.shape:
            b.grad += out.grad
        else:
            b.grad += out.grad.sum(axis=0, keepdims=True)
    out._backward = backward
    return out


def scale(a: Tensor, s: float) -> Tensor:
    out = _node(a.data * s, (a,), None)

    def backward():
        a.grad += s * out.grad
    out._backward = backward
    return out


def transpose(a: Tensor) -> Tensor:
    out = _node(a.data.T, (a,), None)

    def backward():
        a.grad += out.grad.T
    out._backward = backward
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"concat_cols row mismatch: {a.shape} vs {b.shape}")
    out = _node(np.hstack([a.data, b.data]), (a, b), None)
    split = a.shape[1]

    def backward():
        a.grad += out.grad[:, :split]
        b.grad += out.grad[:, split:]
    out._backward = backward
    return out


def relu(a: Tensor) -> Tensor:
    out = _node(np.maximum(a.data, 0.0), (a,), None)

    def backward():
        a.grad += (a.data > 0.0) * out.grad
    out._backward = backward
    return out


def sigmoid(a: Tensor) -> Tensor:
    # numerically stable in both tails
    x = a.data
    y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                 np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = _node(y, (a,), None)

    def backward():
        a.grad += y * (1.0 - y) * out.grad
    out._backward = backward
    return out


def softmax_rows(a: Tensor) -> Tensor:
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)
    out = _node(y, (a,), None)

    def backward():
        dot = (out.grad * y).sum(axis=1, keepdims=True)
        a.grad += y * (out.grad - dot)
    out._backward = backward
    return out


def weighted_sum(streams: list[Tensor], weights: Tensor) -> Tensor:
    """sum_j weights[0, j] * streams[j]; all streams share one shape."""
    if weights.shape != (1, len(streams)):
        raise ValueError(f"need (1, {len(streams)}) weights, got {weights.shape}")
    w = weights.data[0]
    out = _node(sum(w[j] * streams[j].data for j in range(len(streams))),
                (*streams, weights), None)

    def backward():
        for j, s in enumerate(streams):
            s.grad += w[j] * out.grad
            weights.grad[0, j] += float((s.data * out.grad).sum())
    out._backward = backward
    return out


def bce_loss(scores: Tensor, targets: np.ndarray) -> Tensor:
    """Mean binary cross-entropy of an (n, 1) score column against targets.

    Scores are clamped to [1e-7, 1-1e-7]; the gradient is zero where the
    clamp is active.
    """
    y = np.asarray(targets, dtype=np.float64).reshape(-1, 1)
    if scores.shape != y.shape:
        raise ValueError(f"bce length mismatch: {scores.shape} vs {y.shape}")
    s = np.clip(scores.data, SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP)
    unclamped = (scores.data > SIGMOID_CLAMP) & (scores.data < 1.0 - SIGMOID_CLAMP)
    n = y.shape[0]
    value = -(y * np.log(s) + (1.0 - y) * np.log(1.0 - s)).mean()
    out = _node(np.array([[value]]), (scores,), None)

    def backward():
        g = (-(y / s) + (1.0 - y) / (1.0 - s)) / n
        scores.grad += np.where(unclamped, g, 0.0) * out.grad[0, 0]
    out._backward = backward
    return out


def sum_all(a: Tensor) -> Tensor:
    out = _node(np.array([[a.data.sum()]]), (a,), None)

    def backward():
        a.grad += out.grad[0, 0]
    out._backward = backward
    return out


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Y = XW + b with b broadcast over rows."""
    return add(matmul(x, w), b)


def attention(xq: Tensor, xkv: Tensor, wq: Tensor, wk: Tensor,
              wv: Tensor, wo: Tensor) -> Tensor:
    """Single-head scaled dot-product attention with a residual connection.

    Y = softmax(Q K^T / sqrt(d)) V Wo + Xq with Q = Xq Wq, K = Xkv Wk,
    V = Xkv Wv. Self-attention is attention(x, x, ...).
    """
    if xkv.shape[0] == 0:
        raise ValueError("attention requires at least one key/value row")
    d = wq.shape[1]
    q = matmul(xq, wq)
    k = matmul(xkv, wk)
    v = matmul(xkv, wv)
    logits = scale(matmul(q, transpose(k)), 1.0 / math.sqrt(d))
    weights = softmax_rows(logits)
    return add(matmul(matmul(weights, v), wo), xq)


def backward(loss: Tensor) -> None:
    """Populate grads of everything reachable from ``loss`` (a 1x1 tensor)."""
    if loss.shape != (1, 1):
        raise ValueError("backward expects a scalar (1, 1) loss node")
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in visited:
                stack.append((p, False))
    for node in topo:
        node.grad = np.zeros_like(node.data)
    loss.grad[0, 0] = 1.0
    for node in reversed(topo):
        if node._backward is not None:
            node._backward()
