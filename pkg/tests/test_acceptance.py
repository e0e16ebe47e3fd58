"""Release gates for the whole laboratory.

Every gate is a hard bar: oracle equivalence at a fixed tolerance, an
exhaustive audit, or a learning benchmark read from artifacts that
``scripts/run_sac_sanity.py`` and ``scripts/run_e2e.py`` produce. Run
those two scripts before this file; the two benchmark gates fail with
instructions when the artifacts are absent.
"""

import json
import time
from pathlib import Path
from unittest import mock

import numpy as np
import pytest

import eisp.planner as planner_mod
from eisp.autodiff import backward
from eisp.distributions import (
    LocScaleDist,
    dist_log_prob,
    kl_divergence,
    kl_monte_carlo,
)
from eisp.envs import PointRooms, TabularChain, sparse_reward
from eisp.harness import RunConfig, train_single_seed
from eisp.planner import PlannerConfig, collect_rollout, feasibility_estimate, select_subgoal
from eisp.replay import (
    HerStrategy,
    ReplayBuffer,
    Trajectory,
    hindsight_sample_subgoals,
)
from eisp.sac import build_sac, state_value
from eisp.subgoal_gen import build_generator, generator_update, hybrid_loss
from eisp.harness.run import scripted_episode

from oracles import dp_reach_probability, fd_grads, grad_rel_err
from test_autodiff import make_gradcheck_case
from test_planner import audit_decisions
from test_subgoal_gen import make_constant_generator

RUNS = Path(__file__).resolve().parent.parent / "runs"
LOG_2PI = float(np.log(2.0 * np.pi))


def final_rows(metrics_path: Path) -> list[list[str]]:
    lines = metrics_path.read_text().strip().splitlines()
    return [l.split(",") for l in lines[1:]]


# ---------------------------------------------------------------------------
# 1. gradients of every op combination agree with finite differences


def test_gradient_checks_hundred_random_cases():
    t0 = time.monotonic()
    worst = 0.0
    for seed in range(100):
        net, build = make_gradcheck_case(seed)
        analytic = backward(build(), net.params)
        numeric = fd_grads(lambda: float(build().value), net.params)
        worst = max(worst, grad_rel_err(analytic, numeric))
    elapsed = time.monotonic() - t0
    assert worst <= 1e-4, f"worst relative error {worst:.3g}"
    assert elapsed < 60.0, f"gradient checks took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 2. closed-form KL agrees with brute-force Monte-Carlo


def test_kl_closed_form_matches_monte_carlo():
    rng = np.random.default_rng(20_2020)
    for family in ("normal", "laplace"):
        for _ in range(10):
            d = int(rng.integers(1, 4))
            q = LocScaleDist(family, rng.normal(size=d), np.exp(rng.uniform(-1, 1, d)))
            p = LocScaleDist(family, rng.normal(size=d), np.exp(rng.uniform(-1, 1, d)))
            closed = float(kl_divergence(q, p))
            mc, se = kl_monte_carlo(q, p, 1_000_000, rng)
            assert abs(closed - mc) <= 3.0 * se, (
                f"{family}: closed {closed:.6f} vs mc {mc:.6f} +- {se:.6f}"
            )
            assert float(kl_divergence(q, q)) == 0.0

    for d in (1, 2, 5):
        loc = np.random.default_rng(d).normal(size=d)
        n = LocScaleDist("normal", loc, np.ones(d))
        l = LocScaleDist("laplace", loc, np.ones(d))
        assert abs(float(dist_log_prob(n, loc)) - (-0.5 * LOG_2PI * d)) < 1e-12
        assert abs(float(dist_log_prob(l, loc)) - (-d * np.log(2.0))) < 1e-12


# ---------------------------------------------------------------------------
# 3. loss decomposition: frozen hand-worked value, exact additivity


def test_loss_decomposition_frozen_value_and_additivity():
    params = make_constant_generator(loc=1.0, scale=1.0, dec_out=0.5)
    loss, recon, kl = hybrid_loss(
        params, np.array([[0.7]]), np.array([[0.0]]), noise=np.zeros((1, 1))
    )
    assert abs(recon.value - (0.125 + 0.5 * LOG_2PI)) < 1e-10
    assert abs(kl.value - 0.5) < 1e-10
    assert abs(loss.value - (recon.value + kl.value)) < 1e-12

    gen = build_generator(3, 2, hidden=(16,), seed=0)
    rng = np.random.default_rng(7)
    for _ in range(50):
        states = rng.normal(size=(16, 3))
        goals = rng.normal(size=(16, 2))
        ways = rng.normal(size=(16, 2))
        rep = generator_update(
            gen, states, goals, states, goals, ways, beta=0.7, lr=1e-3, rng=rng
        )
        assert abs(rep.total - (rep.l_hy + rep.beta * rep.l_hs)) <= 1e-12
        assert abs(rep.l_hy - (rep.recon_nll + rep.kl_term)) <= 1e-12


# ---------------------------------------------------------------------------
# 4. relabeling audit over ten thousand sampled transitions


def _filled_buffer(episodes=30, seed=0):
    env = PointRooms(1)
    rng = np.random.default_rng(seed)
    buf = ReplayBuffer(episodes, env.spec.epsilon, seed=seed)
    for _ in range(episodes):
        env.reset(seed=int(rng.integers(2**31)))
        buf.store_trajectory(scripted_episode(env, 3.0, rng))
    return env, buf


def test_relabel_audit_ten_thousand_transitions():
    env, buf = _filled_buffer()
    eps = env.spec.epsilon
    for mode in ("future", "final"):
        batch, info = buf.sample_batch(
            10_000, HerStrategy(mode, 0.7), return_info=True
        )
        trajs = buf.trajectories
        for i in range(len(batch)):
            traj = trajs[info["traj_idx"][i]]
            t = int(info["step_idx"][i])
            if info["relabeled"][i]:
                j = int(info["relabel_src"][i])
                if mode == "future":
                    assert j > t, "future relabel must point strictly ahead"
                else:
                    assert j == traj.length
                assert np.array_equal(batch.goals[i], traj.achieved[j])
                want = sparse_reward(traj.achieved[t + 1], batch.goals[i], eps)
                assert batch.rewards[i] == want
            else:
                assert np.array_equal(batch.goals[i], traj.goals_used[t])
                assert batch.rewards[i] == traj.rewards[t]
            assert batch.dones[i] == (1.0 if batch.rewards[i] == 0.0 else 0.0)


# ---------------------------------------------------------------------------
# 5. waypoint schedule over the whole (length, segments) grid


def _line_trajectory(T: int) -> Trajectory:
    ag = np.arange(T + 1, dtype=np.float64)[:, None]
    return Trajectory(
        states=np.hstack([ag, -ag]),
        actions=np.zeros((T, 1)),
        rewards=np.full(T, -1.0),
        goals_used=np.full((T, 1), 1e6),
        achieved=ag,
        desired_goal=np.array([1e6]),
    )


def test_waypoint_schedule_full_grid():
    for T in range(4, 401):
        traj = _line_trajectory(T)
        for n in range(2, 9):
            if T < n:
                continue
            goal, ways, anchors = hindsight_sample_subgoals(traj, n)
            assert goal == traj.achieved[T]
            assert ways.shape == (n - 1, 1)
            for i in range(1, n):
                assert ways[i - 1, 0] == (i * T) // n
                assert anchors[i - 1, 0] == ((i - 1) * T) // n


# ---------------------------------------------------------------------------
# 6. candidate selection equals brute force, ties and snapping included


def test_selector_matches_brute_force():
    sac = build_sac(3, 2, 2, np.full(2, -1.0), np.full(2, 1.0), hidden=(16,), seed=0)
    gen = build_generator(3, 2, hidden=(16,), seed=1)
    cfg = PlannerConfig(T=10, K=16, epsilon_snap=0.3)
    rng = np.random.default_rng(66)
    snaps = 0
    for case in range(10_000):
        s = rng.normal(size=3)
        g = rng.normal(size=2)
        chosen, info = select_subgoal(sac, gen, s, g, cfg, rng=rng, return_info=True)
        vals = info["values"]
        best = 0
        for k in range(1, len(vals)):
            if vals[k] > vals[best]:
                best = k
        assert info["index"] == best
        want = info["candidates"][best]
        if np.linalg.norm(want - g) <= cfg.epsilon_snap:
            snaps += 1
            assert np.array_equal(chosen, g)
        else:
            assert np.array_equal(chosen, want)
        if case < 200:  # independent value recomputation, one candidate at a time
            singles = np.array(
                [float(state_value(sac, s, c)) for c in info["candidates"]]
            )
            np.testing.assert_allclose(vals, singles, rtol=0, atol=1e-9)
    assert snaps > 0, "snap branch never exercised"

    # forced exact ties must resolve to the lowest index
    dup = np.array([[0.4, 0.4], [0.4, 0.4], [0.1, 0.1], [0.1, 0.1]])
    with mock.patch.object(
        planner_mod, "sample_subgoals", lambda dist, K, rng=None, zero_noise=False: dup[:K]
    ):
        for _ in range(100):
            s = rng.normal(size=3)
            g = rng.normal(size=2) + 10.0  # keep snapping out of the way
            _, info = select_subgoal(
                sac, gen, s, g, PlannerConfig(T=10, K=4, epsilon_snap=1e-9),
                return_info=True,
            )
            vals = info["values"]
            assert vals[0] == vals[1] and vals[2] == vals[3]
            assert info["index"] in (0, 2)


# ---------------------------------------------------------------------------
# 7. option switching: zero spurious regenerations over 100 episodes


def test_no_spurious_regenerations_hundred_episodes():
    env = PointRooms(1)
    sac = build_sac(2, 2, 2, env.spec.action_low, env.spec.action_high,
                    hidden=(16,), seed=3)
    gen = build_generator(2, 2, hidden=(16,), seed=4)
    cfg = PlannerConfig(T=6, K=4, epsilon_snap=1e-6)
    rng = np.random.default_rng(17)
    regenerations = 0
    for ep in range(100):
        env.reset(seed=ep)
        traj, options, _ = collect_rollout(
            env, sac, gen, cfg, rng=rng, instrument=True, return_details=True
        )
        audit_decisions(traj, options, cfg, env.spec.epsilon)
        regenerations += len(options)
    assert regenerations >= 100  # at least the start event of every episode


# ---------------------------------------------------------------------------
# 8. Monte-Carlo reachability within 0.05 of exact dynamic programming


def test_reachability_estimate_matches_dp():
    t0 = time.monotonic()
    env = TabularChain(8)
    env.reset(seed=0)
    rng = np.random.default_rng(88)

    def uniform_policy(states, goal):
        return rng.integers(0, 4, size=len(states)).astype(np.float64)

    worst = 0.0
    for start in range(8):
        for target in range(8):
            mc = feasibility_estimate(
                env, uniform_policy,
                np.array([float(start)]), np.array([float(target)]),
                M=50_000, budget=20, rng=rng,
            )
            exact = dp_reach_probability(env, start, target, 20)
            worst = max(worst, abs(mc - exact))
            assert abs(mc - exact) <= 0.05, (
                f"start {start} target {target}: mc {mc:.4f} dp {exact:.4f}"
            )
    elapsed = time.monotonic() - t0
    assert elapsed < 120.0, f"reachability sweep took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 9. the low-level learner alone masters the single-room reach task


def test_low_level_learner_solves_single_room():
    root = RUNS / "sac_sanity"
    seed_dirs = sorted(root.glob("seed*"))
    if len(seed_dirs) < 5:
        pytest.fail(
            f"need 5 completed runs under {root}; produce them with "
            "`python scripts/run_sac_sanity.py`"
        )
    finals = {}
    for d in seed_dirs:
        rows = final_rows(d / "metrics.csv")
        assert int(rows[-1][0]) <= 200_000 + 100  # one episode of overshoot at most
        finals[d.name] = float(rows[-1][1])
        meta = json.loads((d / "run_meta.json").read_text())
        assert meta["wall_time_s"] <= 15 * 60 * 1.25, f"{d.name} too slow"
    passing = sum(v >= 0.9 for v in finals.values())
    assert passing >= 4, f"only {passing}/5 seeds >= 0.90: {finals}"


# ---------------------------------------------------------------------------
# 10. the full planner beats the flat baseline and both ablations


def test_planner_outperforms_baseline_and_ablations():
    root = RUNS / "e2e"
    arms = ("full", "no-hs", "no-vs", "flat")
    finals = {}
    for arm in arms:
        path = root / arm / "report" / "success.csv"
        if not path.exists():
            pytest.fail(
                f"missing {path}; produce the comparison with "
                "`python scripts/run_e2e.py`"
            )
        last = path.read_text().strip().splitlines()[-1].split(",")
        finals[arm] = float(last[-1])
        for seed_dir in sorted((root / arm).glob("seed*")):
            meta = json.loads((seed_dir / "run_meta.json").read_text())
            assert meta["wall_time_s"] <= 45 * 60 * 1.25, f"{seed_dir} too slow"
    gap = finals["full"] - finals["flat"]
    assert gap >= 0.20, f"full vs flat gap only {gap:+.3f} ({finals})"
    assert finals["full"] > finals["no-hs"], finals
    assert finals["full"] > finals["no-vs"], finals


# ---------------------------------------------------------------------------
# 11. fixed-seed training runs are byte-identical


def test_same_seed_runs_are_byte_identical(tmp_path):
    cfg = RunConfig(
        env="pointrooms-1",
        seeds=(0,),
        total_steps=900,
        eval_every=450,
        eval_episodes=4,
        warmup_steps=300,
        buffer_capacity=40,
        batch_size=64,
        pretrain_steps=0,
    )
    a = train_single_seed(cfg, 11, tmp_path / "a")
    b = train_single_seed(cfg, 11, tmp_path / "b")
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
