"""Minimal reverse-mode autodiff over float64 numpy arrays.

Just enough ops for feed-forward velocity models and MLPs: matmul, adds
with row-broadcast bias, elementwise arithmetic, activations, concat and
full reductions. Values are always 2D (batch, features) except reductions.
Graphs are built per step and discarded; parameters are long-lived leaf
Tensors whose .grad fields are filled by backward().
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("value", "grad", "parents", "_backward")

    def __init__(self, value, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape})"


def constant(x) -> Tensor:
    return Tensor(x)


def parameter(x) -> Tensor:
    return Tensor(np.array(x, dtype=np.float64))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out_value = a.value @ b.value

    def bwd(g):
        return g @ b.value.T, a.value.T @ g

    return Tensor(out_value, (a, b), bwd)


def add(a: Tensor, b: Tensor) -> Tensor:
    """a + b where b is same-shape or a (1, n) row bias."""
    out_value = a.value + b.value

    def bwd(g):
        gb = g
        if b.value.shape != g.shape:
            gb = g.sum(axis=0, keepdims=True)
        return g, gb

    return Tensor(out_value, (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def bwd(g):
        return g, -g

    return Tensor(a.value - b.value, (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; shapes must broadcast, grads reduced back."""
    out_value = a.value * b.value

    def bwd(g):
        return _unbroadcast(g * b.value, a.value.shape), _unbroadcast(g * a.value, b.value.shape)

    return Tensor(out_value, (a, b), bwd)


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    # sum out broadcast axes, then restore kept singleton dims
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def scale(a: Tensor, c: float) -> Tensor:
    def bwd(g):
        return (g * c,)

    return Tensor(a.value * c, (a,), bwd)


def square(a: Tensor) -> Tensor:
    def bwd(g):
        return (2.0 * a.value * g,)

    return Tensor(a.value * a.value, (a,), bwd)


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0.0

    def bwd(g):
        return (g * mask,)

    return Tensor(a.value * mask, (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    th = np.tanh(a.value)

    def bwd(g):
        return (g * (1.0 - th * th),)

    return Tensor(th, (a,), bwd)


def mish(a: Tensor) -> Tensor:
    """mish(x) = x * tanh(softplus(x)), softplus computed overflow-safe."""
    x = a.value
    sp = np.logaddexp(0.0, x)
    th = np.tanh(sp)
    sig = 1.0 / (1.0 + np.exp(-x))

    def bwd(g):
        return (g * (th + x * (1.0 - th * th) * sig),)

    return Tensor(x * th, (a,), bwd)


ACTIVATIONS = {"relu": relu, "tanh": tanh, "mish": mish}


def concat(tensors, axis=1) -> Tensor:
    values = [t.value for t in tensors]
    out_value = np.concatenate(values, axis=axis)
    sizes = [v.shape[axis] for v in values]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(out_value, tuple(tensors), bwd)


def sum_all(a: Tensor) -> Tensor:
    def bwd(g):
        return (np.full_like(a.value, float(g)),)

    return Tensor(a.value.sum(), (a,), bwd)


def backward(root: Tensor):
    """Accumulate gradients of a scalar root into every reachable node."""
    if root.value.shape != ():
        raise ValueError("backward() expects a scalar root")
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node._backward is None or node.grad is None:
            continue
        for p, g in zip(node.parents, node._backward(node.grad)):
            if p.grad is None:
                p.grad = np.array(g, dtype=np.float64)
            else:
                p.grad = p.grad + g
