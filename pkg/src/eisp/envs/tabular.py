"""TabularChain(c): a discrete c-cell chain for exact oracles.

Four actions: 0 moves left, 1 moves right, 2 and 3 stay put. Moves off
either end, or across an optional blocked edge, leave the cell
unchanged. The state is the cell index as a length-1 float vector and
the goal map is the identity, with epsilon 0.5 giving exact-cell reach
semantics. Small enough to enumerate, so dynamic programming can supply
ground truth for reachability and shortest paths.
"""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec

N_ACTIONS = 4


class TabularChain(Env):
    def __init__(
        self,
        c: int,
        horizon: int | None = None,
        blocked_edge: tuple[int, int] | None = None,
        terminate_on_success: bool = True,
    ):
        if c < 2:
            raise ValueError("need at least two cells")
        self.c = c
        if blocked_edge is not None:
            i, j = sorted(blocked_edge)
            if j != i + 1 or i < 0 or j >= c:
                raise ValueError(f"blocked edge must join neighbours, got {blocked_edge}")
            blocked_edge = (i, j)
        self.blocked_edge = blocked_edge
        spec = EnvSpec(
            state_dim=1,
            action_dim=1,
            goal_dim=1,
            epsilon=0.5,
            horizon=horizon if horizon is not None else 5 * c,
            action_low=np.zeros(1),
            action_high=np.full(1, float(N_ACTIONS - 1)),
        )
        super().__init__(spec, terminate_on_success)

    def _sample_initial(self, rng) -> np.ndarray:
        return np.array([float(rng.integers(0, self.c))])

    def _sample_goal(self, rng, state) -> np.ndarray:
        g = float(rng.integers(0, self.c))
        while g == state[0]:
            g = float(rng.integers(0, self.c))
        return np.array([g])

    def achieved_goal(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state, dtype=np.float64).copy()

    def _edge_open(self, a: int, b: int) -> bool:
        if self.blocked_edge is None:
            return True
        return tuple(sorted((a, b))) != self.blocked_edge

    def transition(self, cell: int, action: int) -> int:
        if not 0 <= action < N_ACTIONS:
            raise ValueError(f"action {action} outside 0..{N_ACTIONS - 1}")
        if action == 0 and cell > 0 and self._edge_open(cell - 1, cell):
            return cell - 1
        if action == 1 and cell < self.c - 1 and self._edge_open(cell, cell + 1):
            return cell + 1
        return cell

    def transition_table(self) -> np.ndarray:
        """(c, 4) next-cell table; the whole dynamics in one array."""
        table = np.empty((self.c, N_ACTIONS), dtype=np.int64)
        for s in range(self.c):
            for a in range(N_ACTIONS):
                table[s, a] = self.transition(s, a)
        return table

    def _dynamics(self, state, action):
        # accepts the discrete action as a length-1 float vector
        return np.array([float(self.transition(int(state[0]), int(round(action[0]))))])

    def step_batch(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Vectorized transitions: states (M, 1) float cells, actions (M,) ints."""
        table = self.transition_table()
        cells = states[:, 0].astype(np.int64)
        return table[cells, actions.astype(np.int64)].astype(np.float64)[:, None]
