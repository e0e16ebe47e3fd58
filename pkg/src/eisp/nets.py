"""Dense networks over the autodiff graph, with a fast no-graph path.

A ``DenseNet`` is a stack of ``linear`` layers with a fixed elementwise
activation on hidden layers. ``forward`` records the graph for training;
``forward_np`` runs the identical math in plain numpy for rollouts and
target computation, where no gradients are needed.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Param, Tensor

ACTIVATIONS = ("relu", "tanh")


class DenseNet:
    """MLP with layer widths ``sizes = [in, h1, ..., out]``."""

    def __init__(
        self,
        name: str,
        sizes: list[int],
        rng: np.random.Generator,
        activation: str = "relu",
        activate_final: bool = False,
    ):
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"bad layer sizes {sizes}")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.name = name
        self.sizes = list(sizes)
        self.activation = activation
        self.activate_final = activate_final
        self.weights: list[Param] = []
        self.biases: list[Param] = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            # He init for relu, Xavier-ish for tanh
            std = np.sqrt((2.0 if activation == "relu" else 1.0) / fan_in)
            w = rng.standard_normal((fan_out, fan_in)) * std
            self.weights.append(Param(w, f"{name}.w{i}"))
            self.biases.append(Param(np.zeros(fan_out), f"{name}.b{i}"))

    @property
    def params(self) -> list[Param]:
        out: list[Param] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: Tensor) -> Tensor:
        if x.value.ndim != 2 or x.value.shape[1] != self.sizes[0]:
            raise ValueError(
                f"{self.name}: expected input (batch, {self.sizes[0]}), "
                f"got {x.value.shape}"
            )
        act = ad.relu if self.activation == "relu" else ad.tanh
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = ad.linear(h, w, b)
            if i < last or self.activate_final:
                h = act(h)
        return h

    def forward_np(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ValueError(
                f"{self.name}: expected input (batch, {self.sizes[0]}), got {x.shape}"
            )
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.value.T + b.value
            if i < last or self.activate_final:
                h = np.maximum(h, 0.0) if self.activation == "relu" else np.tanh(h)
        return h

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self.params}

    def load_state_dict(self, d: dict[str, np.ndarray]) -> None:
        for p in self.params:
            arr = np.asarray(d[p.name], dtype=np.float64)
            if arr.shape != p.value.shape:
                raise ValueError(
                    f"{p.name}: checkpoint shape {arr.shape} != {p.value.shape}"
                )
            p.value = arr.copy()

    def copy_from(self, other: "DenseNet") -> None:
        if other.sizes != self.sizes:
            raise ValueError(f"size mismatch {other.sizes} vs {self.sizes}")
        for mine, theirs in zip(self.params, other.params):
            mine.value = theirs.value.copy()


def mlp_forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    """Single-vector forward pass: length layer_sizes[0] in, last size out."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.sizes[0]:
        raise ValueError(
            f"{net.name}: expected input of length {net.sizes[0]}, got shape {x.shape}"
        )
    return net.forward_np(x[None, :])[0]


def polyak_update(target: DenseNet, online: DenseNet, rate: float) -> None:
    """target <- (1 - rate) * target + rate * online. rate=1 copies exactly."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"polyak rate {rate} outside [0, 1]")
    for tp, op in zip(target.params, online.params):
        if rate == 1.0:
            tp.value = op.value.copy()
        else:
            tp.value *= 1.0 - rate
            tp.value += rate * op.value
