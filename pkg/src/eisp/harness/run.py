"""Experiment orchestration: bootstrap, pretrain, train, evaluate, report.

Every operation is deterministic for a fixed seed in single-worker mode.
The metrics CSV keeps a constant placeholder in its wall_time_s column
so reruns are byte-identical; real elapsed time goes to run_meta.json.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..envs import make_env, scripted_policy
from ..envs.base import Env
from ..planner import PlannerConfig, collect_flat_rollout, collect_rollout
from ..replay import (
    HerStrategy,
    ReplayBuffer,
    Trajectory,
    hindsight_batch,
    load_dataset,
    save_dataset,
)
from ..sac import (
    build_sac,
    critic_update,
    actor_update,
    load_sac,
    save_sac,
    state_value,
)
from ..subgoal_gen import (
    build_generator,
    generator_update,
    load_generator,
    save_generator,
)
from .config import RunConfig, save_config

CSV_HEADER = "step,success_rate,mean_return,l_hy,l_hs,critic_loss,actor_loss,wall_time_s"


@dataclass(frozen=True)
class MetricsRow:
    step: int
    success_rate: float
    mean_return: float
    l_hy: float
    l_hs: float
    critic_loss: float
    actor_loss: float
    wall_time_s: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.success_rate <= 1.0:
            raise ValueError("success_rate must lie in [0, 1]")

    def csv_line(self) -> str:
        return (
            f"{self.step},{self.success_rate:.6f},{self.mean_return:.6f},"
            f"{self.l_hy:.6f},{self.l_hs:.6f},{self.critic_loss:.6f},"
            f"{self.actor_loss:.6f},{self.wall_time_s:.3f}"
        )


# ---------------------------------------------------------------------------
# bootstrap


def scripted_episode(env: Env, noise_level: float, rng) -> Trajectory:
    s = env.state
    g = env.goal
    states = [s.copy()]
    achieved = [env.achieved_goal(s)]
    actions, rewards, goals_used = [], [], []
    done = False
    while not done:
        a = scripted_policy(env, s, g, noise_level, rng)
        s, r, done, info = env.step(a)
        states.append(s.copy())
        achieved.append(info["achieved_goal"])
        actions.append(np.asarray(a, dtype=np.float64))
        rewards.append(r)
        goals_used.append(g.copy())
    return Trajectory(
        states=np.array(states),
        actions=np.array(actions),
        rewards=np.array(rewards),
        goals_used=np.array(goals_used),
        achieved=np.array(achieved),
        desired_goal=g,
    )


def bootstrap_dataset(env_id: str, episodes: int, noise_level: float, seed: int, out_path):
    """Collect scripted-policy trajectories into a dataset file.

    The file header records the scripted success rate; deterministic per
    seed. episodes=0 writes a valid empty dataset.
    """
    if episodes < 0:
        raise ValueError("episodes must be non-negative")
    env = make_env(env_id)
    rng = np.random.default_rng([seed, 0xB007])
    trajs = []
    successes = 0
    for ep in range(episodes):
        env.reset(seed=int(rng.integers(2**31)))
        traj = scripted_episode(env, noise_level, rng)
        trajs.append(traj)
        if np.any(traj.rewards == 0.0):
            successes += 1
    rate = successes / episodes if episodes else 0.0
    meta = {
        "kind": "dataset",
        "env": env_id,
        "episodes": episodes,
        "noise_level": noise_level,
        "seed": seed,
        "success_rate": rate,
    }
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(out_path, trajs, meta)
    return out_path, rate


# ---------------------------------------------------------------------------
# generator pretraining


def pretrain_generator(dataset_path, cfg: RunConfig, out_dir, seed: int = 0):
    """Train the generator on hindsight triples from a demo dataset.

    Writes generator.bin and pretrain_loss.csv to out_dir; zero steps
    checkpoints the untouched initialization.
    """
    cfg.validate()
    meta, trajs = load_dataset(dataset_path)
    if not trajs:
        raise ValueError(f"{dataset_path}: empty dataset")
    env = make_env(meta["env"])
    params = build_generator(
        env.spec.state_dim, env.spec.goal_dim, hidden=tuple(cfg.hidden),
        family=cfg.family, seed=seed,
    )
    rng = np.random.default_rng([seed, 0x93E])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["step,recon_nll,kl_term,l_hy,l_hs,total"]
    beta = 0.0 if cfg.no_hindsight_sampler else cfg.beta
    for step in range(cfg.pretrain_steps):
        anchors, goals, ways = hindsight_batch(trajs, cfg.n, cfg.pretrain_batch, rng)
        rep = generator_update(
            params, anchors, goals, anchors, goals, ways,
            beta=beta, lr=cfg.gen_lr, rng=rng,
        )
        lines.append(
            f"{step},{rep.recon_nll:.6f},{rep.kl_term:.6f},"
            f"{rep.l_hy:.6f},{rep.l_hs:.6f},{rep.total:.6f}"
        )
    ckpt = out_dir / "generator.bin"
    save_generator(ckpt, params)
    (out_dir / "pretrain_loss.csv").write_text("\n".join(lines) + "\n")
    return ckpt


# ---------------------------------------------------------------------------
# evaluation


def run_eval_episodes(env: Env, act_fn, episodes: int, seed_base) -> tuple[float, float]:
    """Greedy evaluation episodes; act_fn(env) runs one episode and
    returns its trajectory. Success is attainment of the desired goal."""
    if episodes < 1:
        raise ValueError("evaluation needs at least one episode")
    successes = 0
    returns = []
    for ep in range(episodes):
        env.reset(seed=int(np.random.default_rng([*seed_base, ep]).integers(2**31)))
        traj = act_fn(env)
        eps = env.spec.epsilon
        dists = np.linalg.norm(traj.achieved[1:] - traj.desired_goal, axis=-1)
        rewards = np.where(dists <= eps, 0.0, -1.0)
        returns.append(float(rewards.sum()))
        if np.any(dists <= eps):
            successes += 1
    return successes / episodes, float(np.mean(returns))


def _eval_cfg(cfg: RunConfig, env: Env) -> PlannerConfig:
    return PlannerConfig(
        T=cfg.T, n=cfg.n, K=cfg.K, epsilon_snap=env.spec.epsilon,
        zero_noise_candidates=True, first_candidate=cfg.no_value_selector,
    )


def evaluate_checkpoints(
    sac_path,
    env_id: str,
    episodes: int,
    seed: int,
    generator_path=None,
    T: int = 30,
    K: int = 16,
) -> MetricsRow:
    """Standalone evaluation of saved checkpoints on a fresh env."""
    env = make_env(env_id)
    sac = load_sac(sac_path)
    want_in = env.spec.state_dim + env.spec.goal_dim
    if sac.trunk.sizes[0] != want_in:
        raise ValueError(
            f"checkpoint expects input dim {sac.trunk.sizes[0]}, env needs {want_in}"
        )
    if generator_path is not None:
        gen = load_generator(generator_path)
        if gen.trunk.sizes[0] != want_in:
            raise ValueError("generator checkpoint does not match env dims")
        pcfg = PlannerConfig(
            T=T, n=2, K=K, epsilon_snap=env.spec.epsilon, zero_noise_candidates=True
        )
        act = lambda e: collect_rollout(e, sac, gen, pcfg, action_mode="mean")
    else:
        act = lambda e: collect_flat_rollout(e, sac, action_mode="mean")
    sr, ret = run_eval_episodes(env, act, episodes, (seed, 0xE7A1))
    return MetricsRow(0, sr, ret, 0.0, 0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# training


class _Accum:
    def __init__(self):
        self.sums = {}
        self.counts = {}

    def add(self, name, value):
        self.sums[name] = self.sums.get(name, 0.0) + value
        self.counts[name] = self.counts.get(name, 0) + 1

    def mean(self, name):
        c = self.counts.get(name, 0)
        return self.sums.get(name, 0.0) / c if c else 0.0

    def reset(self):
        self.sums.clear()
        self.counts.clear()


def train_single_seed(cfg: RunConfig, seed: int, out_dir) -> Path:
    """One deterministic training run; returns the run directory."""
    cfg.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_config(out_dir / "config.txt", cfg)
    wall_start = time.monotonic()

    env = make_env(cfg.env)
    eval_env = make_env(cfg.env)
    ds, da, dg = env.spec.state_dim, env.spec.action_dim, env.spec.goal_dim

    sac = build_sac(
        ds, da, dg, env.spec.action_low, env.spec.action_high,
        hidden=tuple(cfg.hidden), seed=seed,
        gamma=cfg.gamma, alpha=cfg.alpha, tau_polyak=cfg.tau,
    )
    if cfg.flat_baseline:
        gen = None
    elif cfg.pretrained_generator:
        gen = load_generator(cfg.pretrained_generator)
    else:
        gen = build_generator(
            ds, dg, hidden=tuple(cfg.hidden), family=cfg.family, seed=seed + 1
        )

    buffer = ReplayBuffer(cfg.buffer_capacity, env.spec.epsilon, seed=seed)
    her = HerStrategy(cfg.her_mode, cfg.her_ratio)
    roll_rng = np.random.default_rng([seed, 1])
    update_rng = np.random.default_rng([seed, 2])
    env_seed_rng = np.random.default_rng([seed, 3])
    gen_rng = np.random.default_rng([seed, 4])

    beta = 0.0 if cfg.no_hindsight_sampler else cfg.beta
    pcfg = PlannerConfig(
        T=cfg.T, n=cfg.n, K=cfg.K, epsilon_snap=env.spec.epsilon,
        first_candidate=cfg.no_value_selector,
    )
    eval_pcfg = _eval_cfg(cfg, env)

    metrics_path = out_dir / "metrics.csv"
    decisions_path = out_dir / "decisions.log"
    acc = _Accum()
    rows: list[MetricsRow] = []
    min_value_seen = np.inf
    q_bound = -1.0 / (1.0 - cfg.gamma) - 1.0 if cfg.gamma < 1.0 else -np.inf

    def eval_act(e: Env):
        if cfg.flat_baseline:
            return collect_flat_rollout(e, sac, action_mode="mean")
        return collect_rollout(e, sac, gen, eval_pcfg, action_mode="mean")

    def emit_eval(step: int):
        sr, ret = run_eval_episodes(eval_env, eval_act, cfg.eval_episodes, (seed, 5, step))
        rows.append(
            MetricsRow(
                step, sr, ret,
                acc.mean("l_hy"), acc.mean("l_hs"),
                acc.mean("critic"), acc.mean("actor"),
            )
        )
        acc.reset()

    emit_eval(0)

    steps_done = 0
    sac_iters = 0
    update_debt = 0
    next_eval = cfg.eval_every
    decision_lines = []
    while steps_done < cfg.total_steps:
        env.reset(seed=int(env_seed_rng.integers(2**31)))
        if cfg.flat_baseline:
            traj = collect_flat_rollout(env, sac, rng=roll_rng)
            options_log = []
        else:
            traj, _, options_log = collect_rollout(
                env, sac, gen, pcfg, rng=roll_rng,
                instrument=cfg.log_decisions, return_details=True,
            )
        if cfg.log_decisions:
            decision_lines.extend(f"step={steps_done} {line}" for line in options_log)
        buffer.store_trajectory(traj)
        steps_done += traj.length
        update_debt += traj.length

        if steps_done >= cfg.warmup_steps and buffer.total_transitions >= cfg.batch_size:
            n_updates = update_debt // cfg.update_every
            update_debt -= n_updates * cfg.update_every
            for _ in range(n_updates):
                batch = buffer.sample_batch(cfg.batch_size, her)
                c1, c2 = critic_update(sac, batch, cfg.sac_lr, rng=update_rng)
                a_loss = actor_update(sac, batch, cfg.sac_lr, rng=update_rng)
                acc.add("critic", 0.5 * (c1 + c2))
                acc.add("actor", a_loss)
                sac_iters += 1
                if gen is not None and sac_iters % cfg.finetune_every == 0:
                    try:
                        anchors, goals, ways = hindsight_batch(
                            buffer.trajectories, cfg.n, cfg.finetune_batch, gen_rng
                        )
                    except ValueError:
                        continue  # nothing long enough yet
                    rep = generator_update(
                        params=gen, states=anchors, goals=goals,
                        anchors=anchors, hs_goals=goals, waypoints=ways,
                        beta=beta, lr=cfg.gen_lr, rng=gen_rng,
                    )
                    acc.add("l_hy", rep.l_hy)
                    acc.add("l_hs", rep.l_hs)

        if steps_done >= next_eval:
            emit_eval(steps_done)
            while next_eval <= steps_done:
                next_eval += cfg.eval_every
            # loose sanity bound on the learned values
            probe = buffer.sample_batch(min(cfg.batch_size, 64), her)
            v = state_value(sac, probe.states, probe.goals)
            min_value_seen = min(min_value_seen, float(np.min(v)))

    if rows[-1].step != steps_done:
        emit_eval(steps_done)

    metrics_path.write_text(CSV_HEADER + "\n" + "\n".join(r.csv_line() for r in rows) + "\n")
    if cfg.log_decisions:
        decisions_path.write_text("\n".join(decision_lines) + "\n")
    save_sac(out_dir / "sac.bin", sac)
    if gen is not None:
        save_generator(out_dir / "generator.bin", gen)
    meta = {
        "env": cfg.env,
        "seed": seed,
        "steps": steps_done,
        "sac_updates": sac_iters,
        "final_success_rate": rows[-1].success_rate,
        "min_state_value_seen": None if not np.isfinite(min_value_seen) else min_value_seen,
        "value_bound_ok": bool(min_value_seen >= q_bound) if np.isfinite(min_value_seen) else True,
        "wall_time_s": round(time.monotonic() - wall_start, 3),
    }
    (out_dir / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out_dir


def train(cfg: RunConfig) -> list[Path]:
    """Run every seed in the config serially; returns the run dirs."""
    cfg.validate()
    root = Path(cfg.out)
    dirs = []
    for seed in cfg.seeds:
        dirs.append(train_single_seed(cfg, seed, root / f"seed{seed}"))
    return dirs


# ---------------------------------------------------------------------------
# reporting


def _read_metrics(path) -> tuple[list[str], dict[str, np.ndarray]]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    if header != CSV_HEADER.split(","):
        raise ValueError(f"{path}: unexpected metrics header")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return header, {name: data[:, i] for i, name in enumerate(header)}


def emit_report(run_root) -> Path:
    """Combine per-seed metrics into averaged curves (CSV + PNG)."""
    run_root = Path(run_root)
    seed_dirs = sorted(d for d in run_root.glob("seed*") if (d / "metrics.csv").exists())
    if not seed_dirs:
        raise ValueError(f"{run_root}: no seed*/metrics.csv found")
    per_seed = {}
    steps = None
    for d in seed_dirs:
        _, cols = _read_metrics(d / "metrics.csv")
        if steps is None:
            steps = cols["step"]
        elif not np.array_equal(steps, cols["step"]):
            raise ValueError(f"{d}: step grid differs from {seed_dirs[0]}")
        per_seed[d.name] = cols

    report_dir = run_root / "report"
    report_dir.mkdir(exist_ok=True)
    names = [d.name for d in seed_dirs]

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for metric, fname in (("success_rate", "success"), ("mean_return", "return")):
        series = np.stack([per_seed[n][metric] for n in names])
        mean = series.mean(axis=0)
        lines = ["step," + ",".join(names) + ",mean"]
        for i, s in enumerate(steps):
            vals = ",".join(f"{series[j, i]:.6f}" for j in range(len(names)))
            lines.append(f"{int(s)},{vals},{mean[i]:.6f}")
        (report_dir / f"{fname}.csv").write_text("\n".join(lines) + "\n")

        fig, ax = plt.subplots(figsize=(6, 4))
        for j, n in enumerate(names):
            ax.plot(steps, series[j], alpha=0.35, lw=1)
        ax.plot(steps, mean, lw=2.2, color="k", label="mean")
        ax.set_xlabel("env steps")
        ax.set_ylabel(metric)
        ax.legend()
        fig.tight_layout()
        fig.savefig(report_dir / f"{fname}.png", dpi=110)
        plt.close(fig)
    return report_dir
