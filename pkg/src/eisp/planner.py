"""High-level control: candidate ranking, option-based rollouts, and a
Monte-Carlo reachability probe.

A rollout is segmented into options. At every decision point the encoder
proposes K candidate subgoals, the critic-derived state value ranks
them, and the winner (snapped to the final goal when already close)
conditions the low-level policy until the option ends. Options end when
the subgoal is reached or a per-option step budget T runs out.

By default each selection restarts the option clock, so an option begun
right after an early reach still gets a full T steps. The alternative
reading, where the timeout fires at absolute episode times t = T, 2T,
..., regardless of mid-interval selections, sits behind
``absolute_time_mod``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs.base import Env, sparse_reward
from .replay import Trajectory
from .sac import SacParams, policy_action, state_value
from .subgoal_gen import GeneratorParams, encode, sample_subgoals


@dataclass(frozen=True)
class PlannerConfig:
    T: int = 30                      # steps per option
    n: int = 4                       # subgoals per trajectory (hindsight sampler)
    K: int = 16                      # candidates per selection
    epsilon_snap: float = 0.05       # snap-to-goal distance
    zero_noise_candidates: bool = False
    absolute_time_mod: bool = False  # literal t mod T timeout rule
    first_candidate: bool = False    # ablation: skip value ranking

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.epsilon_snap <= 0.0:
            raise ValueError("epsilon_snap must be positive")


@dataclass
class OptionRecord:
    t_start: int
    event: str                # what triggered this selection
    initial_state: np.ndarray
    subgoal: np.ndarray
    terminal_state: np.ndarray | None = None
    steps_used: int = 0
    reached: bool = False


def select_subgoal(
    sac: SacParams,
    generator: GeneratorParams,
    s: np.ndarray,
    g: np.ndarray,
    cfg: PlannerConfig,
    rng: np.random.Generator | None = None,
    return_info: bool = False,
):
    """Pick the candidate subgoal with the highest state value.

    Ties break toward the lowest candidate index; a winner within
    ``epsilon_snap`` of the final goal is replaced by the goal itself.
    """
    dist = encode(generator, s, g)
    cands = sample_subgoals(dist, cfg.K, rng=rng, zero_noise=cfg.zero_noise_candidates)
    S = np.tile(s, (cfg.K, 1))
    values = state_value(sac, S, cands)
    idx = 0 if cfg.first_candidate else int(np.argmax(values))
    chosen = cands[idx]
    snapped = bool(np.linalg.norm(chosen - g) <= cfg.epsilon_snap)
    if snapped:
        chosen = g.copy()
    if return_info:
        return chosen, {
            "candidates": cands,
            "values": values,
            "index": idx,
            "snapped": snapped,
        }
    return chosen


def format_decision(t: int, event: str, subgoal: np.ndarray, values: np.ndarray) -> str:
    sg = " ".join(f"{x:.17g}" for x in subgoal)
    vs = " ".join(f"{v:.17g}" for v in values)
    return f"t={t} event={event} subgoal=[{sg}] values=[{vs}]"


def collect_rollout(
    env: Env,
    sac: SacParams,
    generator: GeneratorParams,
    cfg: PlannerConfig,
    rng: np.random.Generator | None = None,
    action_mode: str = "stochastic",
    instrument: bool = False,
    return_details: bool = False,
):
    """Run one episode with option-segmented subgoal selection.

    The env must be freshly reset. Returns the trajectory, with rewards
    computed against the active subgoal of each step; ``return_details``
    adds the option records and (t, event, subgoal, values) log lines.
    """
    eps = env.spec.epsilon
    s = env.state
    g = env.goal
    states = [s.copy()]
    achieved = [env.achieved_goal(s)]
    actions, rewards, goals_used = [], [], []
    options: list[OptionRecord] = []
    log: list[str] = []

    t = 0
    age = 0  # steps since the last selection
    subgoal = None
    done = False
    while not done:
        if subgoal is None:
            event = "start"
        elif np.linalg.norm(achieved[-1] - subgoal) <= eps:
            event = "reached"
        elif (t % cfg.T == 0) if cfg.absolute_time_mod else (age >= cfg.T):
            event = "timeout"
        else:
            event = None
        if event is not None:
            if options:
                rec = options[-1]
                rec.terminal_state = s.copy()
                rec.steps_used = t - rec.t_start
                rec.reached = bool(np.linalg.norm(achieved[-1] - rec.subgoal) <= eps)
            subgoal, info = select_subgoal(sac, generator, s, g, cfg, rng=rng, return_info=True)
            options.append(OptionRecord(t, event, s.copy(), subgoal.copy()))
            if instrument:
                log.append(format_decision(t, event, subgoal, info["values"]))
            age = 0

        a, _ = policy_action(sac, s, subgoal, mode=action_mode, rng=rng)
        s, _, done, step_info = env.step(a)
        t += 1
        age += 1
        states.append(s.copy())
        achieved.append(step_info["achieved_goal"])
        actions.append(a)
        goals_used.append(subgoal.copy())
        rewards.append(sparse_reward(achieved[-1], subgoal, eps))

    rec = options[-1]
    rec.terminal_state = s.copy()
    rec.steps_used = t - rec.t_start
    rec.reached = bool(np.linalg.norm(achieved[-1] - rec.subgoal) <= eps)

    traj = Trajectory(
        states=np.array(states),
        actions=np.array(actions),
        rewards=np.array(rewards),
        goals_used=np.array(goals_used),
        achieved=np.array(achieved),
        desired_goal=g,
    )
    if return_details:
        return traj, options, log
    return traj


def collect_flat_rollout(
    env: Env,
    sac: SacParams,
    rng: np.random.Generator | None = None,
    action_mode: str = "stochastic",
) -> Trajectory:
    """Baseline episode: the final goal conditions every action directly."""
    eps = env.spec.epsilon
    s = env.state
    g = env.goal
    states = [s.copy()]
    achieved = [env.achieved_goal(s)]
    actions, rewards, goals_used = [], [], []
    done = False
    while not done:
        a, _ = policy_action(sac, s, g, mode=action_mode, rng=rng)
        s, r, done, step_info = env.step(a)
        states.append(s.copy())
        achieved.append(step_info["achieved_goal"])
        actions.append(a)
        goals_used.append(g.copy())
        rewards.append(r)
    return Trajectory(
        states=np.array(states),
        actions=np.array(actions),
        rewards=np.array(rewards),
        goals_used=np.array(goals_used),
        achieved=np.array(achieved),
        desired_goal=g,
    )


def feasibility_estimate(
    env: Env,
    policy,
    s0: np.ndarray,
    subgoal: np.ndarray,
    M: int,
    budget: int,
    rng: np.random.Generator | None = None,
) -> float:
    """Fraction of M policy rollouts from s0 that come within epsilon of
    the subgoal inside ``budget`` steps. ``policy(states, goal)`` maps a
    (M, state_dim) batch to actions; reaching at step 0 counts.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    s0 = np.asarray(s0, dtype=np.float64)
    subgoal = np.asarray(subgoal, dtype=np.float64)
    eps = env.spec.epsilon

    if hasattr(env, "step_batch"):
        S = np.tile(s0, (M, 1))
        hit = np.linalg.norm(env.achieved_goal(S) - subgoal, axis=-1) <= eps
        for _ in range(budget):
            if hit.all():
                break
            live = ~hit
            acts = policy(S[live], subgoal)
            S[live] = env.step_batch(S[live], acts)
            d = np.linalg.norm(env.achieved_goal(S[live]) - subgoal, axis=-1)
            hit[live] = d <= eps
        return float(hit.mean())

    hits = 0
    for _ in range(M):
        env.reset_to(s0, subgoal)
        s = env.state
        if np.linalg.norm(env.achieved_goal(s) - subgoal) <= eps:
            hits += 1
            continue
        for _ in range(budget):
            a = policy(s[None, :], subgoal)[0]
            s, _, done, _ = env.step(a)
            if np.linalg.norm(env.achieved_goal(s) - subgoal) <= eps:
                hits += 1
                break
            if done:
                break
    return float(hits / M)
