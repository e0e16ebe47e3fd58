"""Goal-conditioned environment base: spec, sparse reward, episode plumbing.

Every environment exposes a known goal map ``achieved_goal`` projecting
states into goal space, and pays reward 0 exactly when the achieved goal
lies within ``epsilon`` of the desired goal (otherwise -1). Episodes are
seed-deterministic: identical seed and action sequence reproduce the
trajectory bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    state_dim: int
    action_dim: int
    goal_dim: int
    epsilon: float
    horizon: int
    action_low: np.ndarray
    action_high: np.ndarray

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")


def sparse_reward(ag: np.ndarray, g: np.ndarray, epsilon: float):
    """0 iff ||ag - g||_2 <= epsilon else -1. Broadcasts over leading axes."""
    ag = np.asarray(ag, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if ag.shape[-1] != g.shape[-1]:
        raise ValueError(f"goal dims differ: {ag.shape} vs {g.shape}")
    d = np.linalg.norm(ag - g, axis=-1)
    r = np.where(d <= epsilon, 0.0, -1.0)
    return float(r) if r.ndim == 0 else r


class Env:
    """Base episode machinery; subclasses implement sampling and dynamics."""

    spec: EnvSpec

    def __init__(self, spec: EnvSpec, terminate_on_success: bool = True):
        self.spec = spec
        self.terminate_on_success = terminate_on_success
        self._rng = np.random.default_rng(0)
        self._state: np.ndarray | None = None
        self._goal: np.ndarray | None = None
        self._t = 0
        self._finished = True

    # subclass hooks -------------------------------------------------------
    def _sample_initial(self, rng) -> np.ndarray:
        raise NotImplementedError

    def _sample_goal(self, rng, state) -> np.ndarray:
        raise NotImplementedError

    def _dynamics(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def achieved_goal(self, state: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # episode API ----------------------------------------------------------
    def reset(self, seed: int | None = None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._state = self._sample_initial(self._rng)
        self._goal = self._sample_goal(self._rng, self._state)
        self._t = 0
        self._finished = False
        return self._state.copy(), self._goal.copy()

    def reset_to(self, state: np.ndarray, goal: np.ndarray):
        """Place the episode at an arbitrary (state, goal); used by rollouts
        that probe reachability rather than sample from the task."""
        state = np.asarray(state, dtype=np.float64)
        goal = np.asarray(goal, dtype=np.float64)
        if state.shape != (self.spec.state_dim,) or goal.shape != (self.spec.goal_dim,):
            raise ValueError("reset_to: bad state or goal shape")
        self._state = state.copy()
        self._goal = goal.copy()
        self._t = 0
        self._finished = False
        return self._state.copy(), self._goal.copy()

    def step(self, action: np.ndarray):
        if self._finished:
            raise RuntimeError("step called on a finished episode; reset first")
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.spec.action_dim,):
            raise ValueError(
                f"action shape {action.shape}, expected ({self.spec.action_dim},)"
            )
        if not np.all(np.isfinite(action)):
            raise ValueError("non-finite action")
        action = np.clip(action, self.spec.action_low, self.spec.action_high)
        self._state = self._dynamics(self._state, action)
        self._t += 1
        ag = self.achieved_goal(self._state)
        reward = sparse_reward(ag, self._goal, self.spec.epsilon)
        success = reward == 0.0
        done = (success and self.terminate_on_success) or self._t >= self.spec.horizon
        if done:
            self._finished = True
        info = {"achieved_goal": ag, "success": success, "t": self._t}
        return self._state.copy(), reward, done, info

    @property
    def goal(self) -> np.ndarray:
        return self._goal.copy()

    @property
    def state(self) -> np.ndarray:
        return self._state.copy()

    @property
    def t(self) -> int:
        return self._t
