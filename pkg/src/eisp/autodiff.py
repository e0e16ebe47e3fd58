"""Reverse-mode automatic differentiation over numpy arrays.

Define-by-run graph in the micrograd style: every operation returns a
``Tensor`` that remembers its parent nodes and a closure mapping the
incoming gradient to parent gradients. ``backward`` walks the recorded
graph once, in reverse topological order, and accumulates gradients for
the requested ``Param`` leaves. Everything is float64.

The op set is deliberately small: exactly what dense networks and
location-scale likelihoods need. Inference-time code paths should use
the plain-numpy ``forward_np`` methods on networks instead of building
graphs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_LN2 = float(np.log(2.0))


class Tensor:
    """A node in the autodiff graph wrapping a float64 ndarray."""

    __slots__ = ("value", "parents", "bwd")

    def __init__(self, value, parents=(), bwd=None):
        if isinstance(value, np.ndarray) and value.dtype == np.float64:
            self.value = value
        else:
            self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.bwd = bwd

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, leaf={self.bwd is None})"


class Param(Tensor):
    """Leaf tensor with a stable name; optimizers and checkpoints key on it."""

    __slots__ = ("name",)

    def __init__(self, value, name: str):
        super().__init__(np.array(value, dtype=np.float64))
        self.name = name

    def __repr__(self):
        return f"Param({self.name!r}, shape={self.value.shape})"


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        av = a.value
        out = Tensor(av + b, (a,), lambda g: (g,))
        return out
    v = a.value + b.value

    def bwd(g):
        return (_unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape))

    return Tensor(v, (a, b), bwd)


def sub(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        return Tensor(a.value - b, (a,), lambda g: (g,))
    v = a.value - b.value

    def bwd(g):
        return (_unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape))

    return Tensor(v, (a, b), bwd)


def mul(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        return Tensor(a.value * b, (a,), lambda g: (g * b,))
    v = a.value * b.value

    def bwd(g):
        return (
            _unbroadcast(g * b.value, a.value.shape),
            _unbroadcast(g * a.value, b.value.shape),
        )

    return Tensor(v, (a, b), bwd)


def div(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        return mul(a, 1.0 / b)
    v = a.value / b.value

    def bwd(g):
        return (
            _unbroadcast(g / b.value, a.value.shape),
            _unbroadcast(-g * v / b.value, b.value.shape),
        )

    return Tensor(v, (a, b), bwd)


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.value, (a,), lambda g: (-g,))


# ---------------------------------------------------------------------------
# dense-layer and elementwise nonlinearities


def linear(x: Tensor, w: Param, b: Param) -> Tensor:
    """``x @ w.T + b`` for a (batch, fan_in) input and (fan_out, fan_in) weight."""
    xv = x.value
    if xv.ndim != 2:
        raise ValueError(f"linear expects a 2-D input, got shape {xv.shape}")
    if xv.shape[1] != w.value.shape[1]:
        raise ValueError(
            f"linear shape mismatch: input {xv.shape} vs weight {w.value.shape}"
        )
    v = xv @ w.value.T + b.value

    def bwd(g):
        return (g @ w.value, g.T @ xv, g.sum(axis=0))

    return Tensor(v, (x, w, b), bwd)


def relu(x: Tensor) -> Tensor:
    v = np.maximum(x.value, 0.0)

    def bwd(g):
        return (g * (x.value > 0.0),)

    return Tensor(v, (x,), bwd)


def tanh(x: Tensor) -> Tensor:
    v = np.tanh(x.value)

    def bwd(g):
        return (g * (1.0 - v * v),)

    return Tensor(v, (x,), bwd)


def exp(x: Tensor) -> Tensor:
    v = np.exp(x.value)

    def bwd(g):
        return (g * v,)

    return Tensor(v, (x,), bwd)


def log(x: Tensor) -> Tensor:
    v = np.log(x.value)

    def bwd(g):
        return (g / x.value,)

    return Tensor(v, (x,), bwd)


def absolute(x: Tensor) -> Tensor:
    v = np.abs(x.value)

    def bwd(g):
        return (g * np.sign(x.value),)

    return Tensor(v, (x,), bwd)


def square(x: Tensor) -> Tensor:
    def bwd(g):
        return (g * (2.0 * x.value),)

    return Tensor(x.value * x.value, (x,), bwd)


def softplus(x: Tensor) -> Tensor:
    """log(1 + exp(x)), computed stably."""
    v = np.logaddexp(0.0, x.value)

    def bwd(g):
        # sigmoid(x) via tanh to stay stable for large |x|
        return (g * (0.5 * (1.0 + np.tanh(0.5 * x.value))),)

    return Tensor(v, (x,), bwd)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise min; on ties the gradient routes to the first argument."""
    mask = a.value <= b.value
    v = np.where(mask, a.value, b.value)

    def bwd(g):
        return (
            _unbroadcast(g * mask, a.value.shape),
            _unbroadcast(g * ~mask, b.value.shape),
        )

    return Tensor(v, (a, b), bwd)


# ---------------------------------------------------------------------------
# reductions and shape ops


def sumt(x: Tensor, axis: int | None = None) -> Tensor:
    v = x.value.sum(axis=axis)

    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g, x.value.shape),)
        return (np.broadcast_to(np.expand_dims(g, axis), x.value.shape),)

    return Tensor(v, (x,), bwd)


def meant(x: Tensor, axis: int | None = None) -> Tensor:
    n = x.value.size if axis is None else x.value.shape[axis]
    v = x.value.mean(axis=axis)
    inv = 1.0 / n

    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g * inv, x.value.shape),)
        return (np.broadcast_to(np.expand_dims(g * inv, axis), x.value.shape),)

    return Tensor(v, (x,), bwd)


def concat(parts: Sequence[Tensor], axis: int = -1) -> Tensor:
    parts = list(parts)
    v = np.concatenate([p.value for p in parts], axis=axis)
    sizes = [p.value.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(v, tuple(parts), bwd)


def tanh_squash_log_det(u: Tensor) -> Tensor:
    """Per-element log |d tanh(u) / du| = log(1 - tanh(u)^2).

    Uses the stable identity 2*(ln 2 - u - softplus(-2u)).
    """
    return (softplus(mul(u, -2.0)) + u - _LN2) * (-2.0)


# ---------------------------------------------------------------------------
# reverse pass


def backward(loss: Tensor, params: Sequence[Param]) -> dict[str, np.ndarray]:
    """Gradients of a scalar ``loss`` w.r.t. ``params``.

    Parameters not reachable from the loss get a zero gradient of their
    own shape. Raises on non-scalar losses.
    """
    if loss.value.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.value.shape}")

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        nid = id(node)
        if nid in seen:
            continue
        seen.add(nid)
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    for node in reversed(topo):
        g = grads.get(id(node))
        if g is None or node.bwd is None:
            continue
        for parent, pg in zip(node.parents, node.bwd(g)):
            if pg is None:
                continue
            pid = id(parent)
            if pid in grads:
                grads[pid] = grads[pid] + pg
            else:
                grads[pid] = pg

    out: dict[str, np.ndarray] = {}
    for p in params:
        g = grads.get(id(p))
        out[p.name] = np.zeros_like(p.value) if g is None else np.asarray(g)
    return out
