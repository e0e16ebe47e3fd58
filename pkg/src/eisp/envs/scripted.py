"""Hand-written waypoint policies used to bootstrap training data.

Deliberately weak: they know the map (doors, push sides, shortest paths)
but act greedily and are degraded by uniform action noise, so collected
trajectories succeed only sometimes and wander enough to cover space.
"""

from __future__ import annotations

import numpy as np

from .base import Env
from .chainpush import CONTACT, ChainPush
from .chainpush import MAX_STEP as PUSH_STEP
from .pointrooms import MAX_STEP as ROOM_STEP
from .pointrooms import PointRooms
from .tabular import N_ACTIONS, TabularChain

# Calibrated so the noisy script solves pointrooms-3 roughly a quarter of
# the time: strong enough to cross doors, weak enough to leave learning
# headroom. Amplitudes beyond the action range matter because clipping
# turns most steps into coin flips with a faint greedy drift.
DEFAULT_NOISE_LEVEL = 12.0


def _pointrooms_action(env: PointRooms, state, goal):
    pos = state[:2]
    room_a = env.room_of(pos[0])
    room_g = env.room_of(goal[0])
    if room_a == room_g:
        target = goal
    else:
        direction = 1 if room_g > room_a else -1
        wall_idx = room_a if direction > 0 else room_a - 1
        # aim past the far mouth of the doorway at the door's height
        clear = env.wall_thickness / 2.0 + 0.5 * ROOM_STEP
        target = np.array(
            [env.walls[wall_idx] + clear * direction, env.door_centers[wall_idx]]
        )
    return np.clip((target - pos) / ROOM_STEP, -1.0, 1.0)


def _chainpush_action(env: ChainPush, state, goal):
    x, blocks = float(state[0]), state[1:]
    eps = env.spec.epsilon
    # left neighbours nearest-first, then right neighbours nearest-first
    left = [i for i in np.argsort(blocks)[::-1] if blocks[i] < x]
    right = [i for i in np.argsort(blocks) if blocks[i] > x]
    for i in left + right:
        if abs(blocks[i] - goal[i]) <= 0.8 * eps:
            continue
        push_left = blocks[i] < x
        contact_at = blocks[i] + CONTACT if push_left else blocks[i] - CONTACT
        if abs(x - contact_at) > 0.02:
            move = contact_at - x
        else:
            move = goal[i] - blocks[i]
        return np.clip(np.array([move / PUSH_STEP]), -1.0, 1.0)
    return np.zeros(1)


def _tabular_action(env: TabularChain, state, goal):
    cell, target = int(state[0]), int(goal[0])
    if cell == target:
        return 2
    # BFS over the chain graph; a blocked edge can make the goal unreachable
    table = env.transition_table()
    dist = np.full(env.c, -1, dtype=np.int64)
    dist[target] = 0
    frontier = [target]
    while frontier:
        nxt = []
        for u in frontier:
            for v in range(env.c):
                if dist[v] < 0 and any(table[v, a] == u for a in (0, 1)):
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    if dist[cell] < 0:
        return 2
    for a in (0, 1):
        if table[cell, a] != cell and dist[table[cell, a]] == dist[cell] - 1:
            return a
    return 2


def scripted_policy(
    env: Env, state, goal, noise_level: float, rng: np.random.Generator
) -> np.ndarray:
    """Greedy waypoint action, perturbed by uniform noise of the given amplitude."""
    if isinstance(env, PointRooms):
        a = _pointrooms_action(env, state, goal)
    elif isinstance(env, ChainPush):
        a = _chainpush_action(env, state, goal)
    elif isinstance(env, TabularChain):
        a = float(_tabular_action(env, state, goal))
        if noise_level > 0 and rng.uniform() < min(noise_level, 1.0):
            a = float(rng.integers(0, N_ACTIONS))
        return np.array([a])
    else:
        raise TypeError(f"no scripted policy for {type(env).__name__}")
    if noise_level > 0:
        a = np.clip(a + rng.uniform(-noise_level, noise_level, a.shape), -1.0, 1.0)
    return a
