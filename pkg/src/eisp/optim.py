"""Adam over named parameter lists.

State lives in a plain dataclass so checkpoints can serialize it. A step
either applies to every parameter or to none: if any gradient contains a
NaN or inf, the step raises (naming the offending parameter) and leaves
parameters and moments untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Param


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    numeric_epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: list[Param], grads: dict[str, np.ndarray], state: AdamState, lr: float
) -> None:
    """One in-place Adam update with bias correction.

    ``lr = 0`` is a valid no-op; negative lr is rejected.
    """
    if lr < 0.0:
        raise ValueError(f"adam_step: negative learning rate {lr}")
    for p in params:
        g = grads[p.name]
        if g.shape != p.value.shape:
            raise ValueError(
                f"adam_step: gradient shape {g.shape} does not match "
                f"parameter {p.name!r} shape {p.value.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"adam_step: non-finite gradient for {p.name!r}")

    state.step_count += 1
    bc1 = 1.0 - state.beta1 ** state.step_count
    bc2 = 1.0 - state.beta2 ** state.step_count
    for p in params:
        g = grads[p.name]
        m = state.first_moment.get(p.name)
        if m is None:
            m = np.zeros_like(p.value)
            state.first_moment[p.name] = m
            v = np.zeros_like(p.value)
            state.second_moment[p.name] = v
        else:
            v = state.second_moment[p.name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.numeric_epsilon)


def adam_state_arrays(state: AdamState) -> dict[str, np.ndarray]:
    """Flatten moments (plus step count) for checkpointing."""
    out: dict[str, np.ndarray] = {"adam.step_count": np.array([state.step_count])}
    for k, v in state.first_moment.items():
        out[f"adam.m.{k}"] = v
    for k, v in state.second_moment.items():
        out[f"adam.v.{k}"] = v
    return out


def load_adam_state(state: AdamState, arrays: dict[str, np.ndarray]) -> None:
    state.step_count = int(arrays["adam.step_count"][0])
    state.first_moment = {
        k[len("adam.m.") :]: np.array(v, dtype=np.float64)
        for k, v in arrays.items()
        if k.startswith("adam.m.")
    }
    state.second_moment = {
        k[len("adam.v.") :]: np.array(v, dtype=np.float64)
        for k, v in arrays.items()
        if k.startswith("adam.v.")
    }
