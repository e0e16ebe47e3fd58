"""Trajectory replay: storage, HER relabeling, hindsight subgoal extraction.

Trajectories are stored whole (arrays, not flat transitions) so future-
and final-mode relabeling and the hindsight subgoal sampler all read the
same achieved-goal record. Stored step rewards are measured against the
goal the actor was pursuing at that step (``goals_used``), which for a
planner-driven rollout is the chosen subgoal, not the episode goal.

A transition's ``done`` flag means goal attainment (reward 0), never
horizon truncation; a timeout is not a terminal state worth freezing the
value of.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs.base import sparse_reward
from .serialization import load_records, save_records

HER_MODES = ("future", "final", "none")


@dataclass(frozen=True)
class Transition:
    s_t: np.ndarray
    a_t: np.ndarray
    r_t: float
    s_next: np.ndarray
    goal_used: np.ndarray
    done: bool
    ag_next: np.ndarray


@dataclass
class Trajectory:
    """One episode: T steps, T+1 states and achieved goals."""

    states: np.ndarray        # (T+1, state_dim)
    actions: np.ndarray       # (T, action_dim)
    rewards: np.ndarray       # (T,), measured against goals_used
    goals_used: np.ndarray    # (T, goal_dim)
    achieved: np.ndarray      # (T+1, goal_dim)
    desired_goal: np.ndarray  # (goal_dim,)

    @property
    def length(self) -> int:
        return self.actions.shape[0]

    def validate(self, epsilon: float) -> None:
        T = self.length
        if T < 1:
            raise ValueError("empty trajectory")
        if self.states.shape[0] != T + 1 or self.achieved.shape[0] != T + 1:
            raise ValueError("state/achieved arrays must have length T+1")
        if self.rewards.shape != (T,) or self.goals_used.shape[0] != T:
            raise ValueError("rewards/goals_used must have length T")
        if not np.all(np.isin(self.rewards, (0.0, -1.0))):
            raise ValueError("rewards outside {0, -1}")
        expect = sparse_reward(self.achieved[1:], self.goals_used, epsilon)
        if not np.array_equal(expect, self.rewards):
            raise ValueError("stored rewards inconsistent with achieved goals")

    def transition(self, t: int) -> Transition:
        return Transition(
            s_t=self.states[t],
            a_t=self.actions[t],
            r_t=float(self.rewards[t]),
            s_next=self.states[t + 1],
            goal_used=self.goals_used[t],
            done=bool(self.rewards[t] == 0.0),
            ag_next=self.achieved[t + 1],
        )


@dataclass(frozen=True)
class HerStrategy:
    mode: str = "future"
    relabel_ratio: float = 0.8

    def __post_init__(self):
        if self.mode not in HER_MODES:
            raise ValueError(f"unknown HER mode {self.mode!r}")
        if not 0.0 <= self.relabel_ratio <= 1.0:
            raise ValueError("relabel_ratio outside [0, 1]")


@dataclass
class TransitionBatch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    goals: np.ndarray
    dones: np.ndarray  # float 0/1, reward-attainment semantics

    def __len__(self):
        return self.states.shape[0]


class ReplayBuffer:
    """FIFO ring of trajectories with seeded sampling."""

    def __init__(self, capacity: int, epsilon: float, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.epsilon = epsilon
        self._trajs: list[Trajectory] = []
        self._insertions = 0
        self._rng = np.random.default_rng(seed)
        self._flat = None  # concatenated views, rebuilt lazily after stores

    def __len__(self):
        return len(self._trajs)

    @property
    def trajectories(self) -> list[Trajectory]:
        return list(self._trajs)

    @property
    def total_transitions(self) -> int:
        return sum(t.length for t in self._trajs)

    def store_trajectory(self, traj: Trajectory) -> None:
        traj.validate(self.epsilon)
        self._trajs.append(traj)
        self._insertions += 1
        self._flat = None
        if len(self._trajs) > self.capacity:
            self._trajs.pop(0)

    def _flat_arrays(self) -> dict:
        # gathering per sampled transition was the training-loop bottleneck;
        # concatenation once per stored episode amortizes to ~nothing
        if self._flat is None:
            ts = self._trajs
            lengths = np.array([t.length for t in ts])
            self._flat = {
                "lengths": lengths,
                "cum": np.cumsum(lengths),
                "states": np.concatenate([t.states[:-1] for t in ts]),
                "next_states": np.concatenate([t.states[1:] for t in ts]),
                "actions": np.concatenate([t.actions for t in ts]),
                "rewards": np.concatenate([t.rewards for t in ts]),
                "goals_used": np.concatenate([t.goals_used for t in ts]),
                "achieved_next": np.concatenate([t.achieved[1:] for t in ts]),
                "achieved_all": np.concatenate([t.achieved for t in ts]),
                "ag_offset": np.cumsum([0] + [t.length + 1 for t in ts])[:-1],
            }
        return self._flat

    def sample_batch(self, n: int, her: HerStrategy, return_info: bool = False):
        """Uniform over stored transitions; each drawn transition is
        independently relabeled with probability ``relabel_ratio``.

        ``return_info`` additionally yields the sampled (trajectory, step)
        indices and relabel sources, for auditing."""
        if n <= 0:
            raise ValueError("batch size must be positive")
        if not self._trajs:
            raise ValueError("cannot sample from an empty buffer")
        F = self._flat_arrays()
        lengths, cum = F["lengths"], F["cum"]
        flat = self._rng.integers(0, cum[-1], size=n)
        traj_idx = np.searchsorted(cum, flat, side="right")
        step_idx = flat - (cum[traj_idx] - lengths[traj_idx])

        relabel = (
            np.zeros(n, dtype=bool)
            if her.mode == "none"
            else self._rng.uniform(size=n) < her.relabel_ratio
        )
        # future-mode indices drawn up front, keeping rng usage batch-shaped
        u = self._rng.uniform(size=n)

        states = F["states"][flat].copy()
        actions = F["actions"][flat].copy()
        next_states = F["next_states"][flat].copy()
        goals = F["goals_used"][flat].copy()
        rewards = F["rewards"][flat].copy()
        relabel_src = np.full(n, -1, dtype=np.int64)
        if relabel.any():
            L = lengths[traj_idx]
            if her.mode == "future":
                # u in [0,1) keeps j within t+1 .. L
                j = step_idx + 1 + (u * (L - step_idx)).astype(np.int64)
            else:
                j = L
            src = F["ag_offset"][traj_idx] + j
            relabel_src[relabel] = j[relabel]
            goals[relabel] = F["achieved_all"][src[relabel]]
            rewards[relabel] = sparse_reward(
                F["achieved_next"][flat[relabel]], goals[relabel], self.epsilon
            )
        batch = TransitionBatch(
            states=states,
            actions=actions,
            rewards=rewards,
            next_states=next_states,
            goals=goals,
            dones=(rewards == 0.0).astype(np.float64),
        )
        if return_info:
            return batch, {
                "traj_idx": traj_idx,
                "step_idx": step_idx,
                "relabeled": relabel,
                "relabel_src": relabel_src,
            }
        return batch


def hindsight_sample_subgoals(traj: Trajectory, n: int):
    """Evenly spaced waypoints of a trajectory as subgoal supervision.

    Returns (relabeled goal, waypoints, anchor states): the goal is the
    final achieved goal; waypoint i (1-based, n-1 of them) is the achieved
    goal at index floor(i*T/n); its anchor is the state where that
    trajectory segment began, index floor((i-1)*T/n).
    """
    if n < 2:
        raise ValueError("need n >= 2 segments")
    T = traj.length
    if T < n:
        raise ValueError(f"trajectory of length {T} too short for n={n}")
    idx = np.array([(i * T) // n for i in range(1, n)])
    anchor_idx = np.array([((i - 1) * T) // n for i in range(1, n)])
    return traj.achieved[T].copy(), traj.achieved[idx].copy(), traj.states[anchor_idx].copy()


def hindsight_batch(trajs: list[Trajectory], n: int, batch_size: int, rng) -> tuple:
    """Assemble generator training arrays (anchors, goals, waypoints) by
    hindsight-sampling whole trajectories. Trajectories shorter than n
    segments are skipped."""
    usable = [t for t in trajs if t.length >= n]
    if not usable:
        raise ValueError(f"no trajectory long enough for n={n} segments")
    anchors, goals, waypoints = [], [], []
    while len(anchors) < batch_size:
        traj = usable[int(rng.integers(0, len(usable)))]
        g, subs, ancs = hindsight_sample_subgoals(traj, n)
        for w, a in zip(subs, ancs):
            anchors.append(a)
            goals.append(g)
            waypoints.append(w)
    k = batch_size
    return np.array(anchors[:k]), np.array(goals[:k]), np.array(waypoints[:k])


# ---------------------------------------------------------------------------
# offline dataset files


def save_dataset(path, trajs: list[Trajectory], meta: dict) -> None:
    arrays: dict[str, np.ndarray] = {}
    for i, t in enumerate(trajs):
        arrays[f"t{i:05d}.states"] = t.states
        arrays[f"t{i:05d}.actions"] = t.actions
        arrays[f"t{i:05d}.rewards"] = t.rewards
        arrays[f"t{i:05d}.goals_used"] = t.goals_used
        arrays[f"t{i:05d}.achieved"] = t.achieved
        arrays[f"t{i:05d}.desired"] = t.desired_goal
    save_records(path, {**meta, "n_trajectories": len(trajs)}, arrays)


def load_dataset(path) -> tuple[dict, list[Trajectory]]:
    meta, arrays = load_records(path)
    trajs = []
    for i in range(int(meta["n_trajectories"])):
        p = f"t{i:05d}"
        trajs.append(
            Trajectory(
                states=arrays[f"{p}.states"],
                actions=arrays[f"{p}.actions"],
                rewards=arrays[f"{p}.rewards"],
                goals_used=arrays[f"{p}.goals_used"],
                achieved=arrays[f"{p}.achieved"],
                desired_goal=arrays[f"{p}.desired"],
            )
        )
    return meta, trajs
