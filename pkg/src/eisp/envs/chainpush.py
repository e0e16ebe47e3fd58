"""ChainPush(m): a 1-D agent pushing m blocks along a line.

The agent displaces a block when its motion would overlap it (contact
distance 0.1); a pushed block pushes its neighbour in turn. The goal is
the target positions of the blocks ONLY: the agent's own coordinate is
not part of goal space, so goal space is a strict projection of state
space.

On a line the agent can never pass a block, so from a given start it can
only push blocks on its left further left and blocks on its right
further right, with contact stacking. Goals are therefore sampled
generatively: pick leftward/rightward push amounts, apply the stacking
rule, and use the resulting block layout as the target. Every episode's
goal is reachable by construction.

The agent is confined to [-2, 2]; blocks may be pushed slightly past
(their clamp is half a unit wider), which keeps push dynamics jam-free
while goals stay inside [-1.5, 1.5].
"""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec

MAX_STEP = 0.08
CONTACT = 0.1
X_LO, X_HI = -2.0, 2.0
GOAL_LO, GOAL_HI = -1.5, 1.5


def _stack_push(blocks: np.ndarray, agent_x: float, t_left: float, t_right: float):
    """Final block layout after pushing the left neighbour chain left by
    ``t_left`` and the right chain right by ``t_right``."""
    out = blocks.copy()
    left = np.where(blocks < agent_x)[0]
    right = np.where(blocks > agent_x)[0]
    if t_left > 0 and left.size:
        order = left[np.argsort(blocks[left])[::-1]]  # nearest first
        front = blocks[order[0]] - t_left
        for i in order:
            if out[i] > front:
                out[i] = front
            front = out[i] - CONTACT
    if t_right > 0 and right.size:
        order = right[np.argsort(blocks[right])]
        front = blocks[order[0]] + t_right
        for i in order:
            if out[i] < front:
                out[i] = front
            front = out[i] + CONTACT
    return out


class ChainPush(Env):
    def __init__(
        self,
        m: int,
        epsilon: float = 0.05,
        horizon: int | None = None,
        terminate_on_success: bool = True,
    ):
        if m < 1:
            raise ValueError("need at least one block")
        self.m = m
        spec = EnvSpec(
            state_dim=1 + m,
            action_dim=1,
            goal_dim=m,
            epsilon=epsilon,
            horizon=horizon if horizon is not None else 80 * m,
            action_low=-np.ones(1),
            action_high=np.ones(1),
        )
        super().__init__(spec, terminate_on_success)

    def _sample_initial(self, rng) -> np.ndarray:
        slots = np.linspace(-0.6, 0.6, self.m) if self.m > 1 else np.array([0.0])
        blocks = slots + rng.uniform(-0.08, 0.08, self.m)
        gap = int(rng.integers(0, self.m + 1))  # 0 = left of all blocks
        if gap == 0:
            agent = blocks[0] - CONTACT - rng.uniform(0.15, 0.4)
        elif gap == self.m:
            agent = blocks[-1] + CONTACT + rng.uniform(0.15, 0.4)
        else:
            agent = 0.5 * (blocks[gap - 1] + blocks[gap])
        return np.concatenate([[float(np.clip(agent, X_LO + 0.1, X_HI - 0.1))], blocks])

    def _sample_goal(self, rng, state) -> np.ndarray:
        x, blocks = float(state[0]), state[1:]
        for _ in range(100):
            t_left = rng.uniform(0.0, 1.0)
            t_right = rng.uniform(0.0, 1.0)
            g = _stack_push(blocks, x, t_left, t_right)
            if g.min() < GOAL_LO or g.max() > GOAL_HI:
                continue
            if np.linalg.norm(g - blocks) > 3 * self.spec.epsilon:
                return g
        # fall back to a small guaranteed-legal push on whichever side has room
        side_right = blocks.max() < GOAL_HI - 0.3 and x < blocks.max()
        return _stack_push(blocks, x, 0.0 if side_right else 0.25, 0.25 if side_right else 0.0)

    def achieved_goal(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state, dtype=np.float64)[..., 1:].copy()

    def _dynamics(self, state, action):
        x = float(state[0])
        blocks = state[1:].copy()
        dx = float(action[0]) * MAX_STEP
        x_new = float(np.clip(x + dx, X_LO, X_HI))
        if dx > 0:
            front = x_new
            for i in np.argsort(blocks):
                if blocks[i] <= x:
                    continue
                if blocks[i] < front + CONTACT:
                    blocks[i] = min(front + CONTACT, X_HI + 0.5)
                    front = blocks[i]
                else:
                    break
        elif dx < 0:
            front = x_new
            for i in np.argsort(blocks)[::-1]:
                if blocks[i] >= x:
                    continue
                if blocks[i] > front - CONTACT:
                    blocks[i] = max(front - CONTACT, X_LO - 0.5)
                    front = blocks[i]
                else:
                    break
        return np.concatenate([[x_new], blocks])
