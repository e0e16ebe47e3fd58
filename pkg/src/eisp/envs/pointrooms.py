"""PointRooms(k): a 2-D point agent crossing k unit rooms through doors.

Rooms sit side by side on x in [-k/2, k/2], y in [-1/2, 1/2], with a
thick vertical wall between neighbours pierced by one door. Coordinates
are centered so goal space sits near the origin, where the subgoal prior
has mass. The agent starts in the leftmost room; goals are drawn in the
rightmost. Motion is axis-ordered (y then x) so a blocked x-crossing
slides along the wall; each step moves at most ``max_step`` per axis.

The wall is a slab deeper than one step, so a door is a short corridor:
crossing takes several consecutive aligned moves, which undirected
exploration almost never produces but a waypoint aimed at the door mouth
makes routine. Inside the corridor the y-motion is confined to the door
band. ``wall_thickness=0`` recovers a thin wall crossable in one step.

State is (x, y) plus the static door-center encoding of the layout, so
networks see which layout they inhabit. The goal map keeps (x, y) only.
"""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec

MAX_STEP = 0.08
_WALL_MARGIN = 1e-6
_SPAWN_MARGIN = 0.1


class PointRooms(Env):
    def __init__(
        self,
        k: int,
        epsilon: float = 0.05,
        horizon: int | None = None,
        door_width: float = 0.10,
        wall_thickness: float = 0.20,
        terminate_on_success: bool = True,
    ):
        if k < 1:
            raise ValueError("need at least one room")
        if door_width <= 0 or wall_thickness < 0:
            raise ValueError("door_width must be positive, wall_thickness nonnegative")
        self.k = k
        self.door_width = door_width
        self.wall_thickness = wall_thickness
        # door centers alternate above/below the midline
        self.door_centers = np.array([0.25 * (-1.0) ** j for j in range(k - 1)])
        self.walls = np.array([-k / 2.0 + (j + 1) for j in range(k - 1)])
        spec = EnvSpec(
            state_dim=2 + (k - 1),
            action_dim=2,
            goal_dim=2,
            epsilon=epsilon,
            horizon=horizon if horizon is not None else 100 * k,
            action_low=-np.ones(2),
            action_high=np.ones(2),
        )
        super().__init__(spec, terminate_on_success)
        self.x_lo, self.x_hi = -k / 2.0, k / 2.0
        self.y_lo, self.y_hi = -0.5, 0.5

    def _with_layout(self, pos: np.ndarray) -> np.ndarray:
        return np.concatenate([pos, self.door_centers])

    def _sample_initial(self, rng) -> np.ndarray:
        x = rng.uniform(self.x_lo + _SPAWN_MARGIN, self.x_lo + 1.0 - _SPAWN_MARGIN)
        y = rng.uniform(self.y_lo + _SPAWN_MARGIN, self.y_hi - _SPAWN_MARGIN)
        return self._with_layout(np.array([x, y]))

    def _sample_goal(self, rng, state) -> np.ndarray:
        x = rng.uniform(self.x_hi - 1.0 + _SPAWN_MARGIN, self.x_hi - _SPAWN_MARGIN)
        y = rng.uniform(self.y_lo + _SPAWN_MARGIN, self.y_hi - _SPAWN_MARGIN)
        return np.array([x, y])

    def achieved_goal(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state, dtype=np.float64)[..., :2].copy()

    def _move(self, x, y, dx, dy):
        """Axis-ordered displacement with wall blocking; scalar or vector args."""
        half = self.wall_thickness / 2.0
        band = self.door_width / 2.0
        y2 = np.clip(y + dy, self.y_lo, self.y_hi)
        for w, c in zip(self.walls, self.door_centers):
            # inside a doorway the y-motion is confined to the door band
            inside = np.abs(x - w) < half
            y2 = np.where(inside, np.clip(y2, c - band, c + band), y2)
        x2 = np.clip(x + dx, self.x_lo, self.x_hi)
        for w, c in zip(self.walls, self.door_centers):
            crosses = ((x < w) & (x2 >= w)) | ((x > w) & (x2 <= w))
            lands_inside = np.abs(x2 - w) < half
            in_door = np.abs(y2 - c) <= band
            blocked = (crosses | lands_inside) & ~in_door
            stop = np.where(x < w, w - half - _WALL_MARGIN, w + half + _WALL_MARGIN)
            x2 = np.where(blocked, stop, x2)
        return x2, y2

    def _dynamics(self, state, action):
        d = action * MAX_STEP
        x2, y2 = self._move(state[0], state[1], d[0], d[1])
        return self._with_layout(np.array([float(x2), float(y2)]))

    def step_batch(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Vectorized dynamics over rows; same math as ``step`` without episode
        bookkeeping. Used by Monte-Carlo reachability probes."""
        actions = np.clip(actions, -1.0, 1.0)
        d = actions * MAX_STEP
        x2, y2 = self._move(states[:, 0], states[:, 1], d[:, 0], d[:, 1])
        out = states.copy()
        out[:, 0] = x2
        out[:, 1] = y2
        return out

    def room_of(self, x: float) -> int:
        return int(np.clip(np.floor(x - self.x_lo), 0, self.k - 1))
