"""Main comparison on the two-room environment.

Four arms, shared seeds: the full planner, the two ablations (no hindsight
term, no value selection) and the flat low-level baseline. The scripted
dataset only feeds generator pretraining; the replay buffer starts empty
for every arm. Passing bar: full beats flat by 20 success points and beats
both ablations.
"""

import os

os.environ.setdefault("OMP_NUM_THREADS", "1")

import argparse
import csv
import time
from dataclasses import replace
from pathlib import Path

from eisp.envs.scripted import DEFAULT_NOISE_LEVEL
from eisp.harness import RunConfig, bootstrap_dataset, emit_report, pretrain_generator, train

ARMS = ("full", "no-hs", "no-vs", "flat")


def arm_config(base: RunConfig, arm: str, pre_full: Path, pre_nohs: Path) -> RunConfig:
    if arm == "full":
        return replace(base, pretrained_generator=str(pre_full))
    if arm == "no-hs":
        return replace(base, no_hindsight_sampler=True, pretrained_generator=str(pre_nohs))
    if arm == "no-vs":
        return replace(base, no_value_selector=True, pretrained_generator=str(pre_full))
    if arm == "flat":
        return replace(base, flat_baseline=True)
    raise ValueError(arm)


def final_mean_success(report_dir: Path) -> float:
    with open(report_dir / "success.csv") as fh:
        rows = list(csv.reader(fh))
    return float(rows[-1][-1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/e2e")
    ap.add_argument("--env", default="pointrooms-2")
    ap.add_argument("--steps", type=int, default=500_000)
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--demo-episodes", type=int, default=3000)
    ap.add_argument("--pretrain-steps", type=int, default=20_000)
    ap.add_argument("--eval-episodes", type=int, default=100)
    ap.add_argument("--arms", default=",".join(ARMS))
    args = ap.parse_args()

    root = Path(args.out)
    seeds = tuple(int(s) for s in args.seeds.split(","))
    # beta well above the library default: at this task's goal scale the
    # unit-variance reconstruction cannot hold the encoder against the KL,
    # and the hindsight term collapses out of the loss below beta ~ 0.1
    # (the encoder equilibrates at loc ~ beta). The lower generator lr
    # keeps online fine-tuning from dragging the pretrained structure.
    base = RunConfig(
        env=args.env,
        seeds=seeds,
        total_steps=args.steps,
        eval_every=25_000,
        eval_episodes=args.eval_episodes,
        pretrain_steps=args.pretrain_steps,
        beta=1.0,
        gen_lr=1e-4,
    )

    t0 = time.monotonic()
    dataset = root / "demos" / "dataset.bin"
    if not dataset.exists():
        _, rate = bootstrap_dataset(args.env, args.demo_episodes, seed=0,
                                    noise_level=DEFAULT_NOISE_LEVEL, out_path=dataset)
        print(f"demo dataset: {args.demo_episodes} episodes, scripted success {rate:.3f}")

    pre_full = root / "pretrain_full" / "generator.bin"
    if not pre_full.exists():
        pretrain_generator(dataset, base, pre_full.parent, seed=0)
    pre_nohs = root / "pretrain_nohs" / "generator.bin"
    if not pre_nohs.exists():
        pretrain_generator(dataset, replace(base, no_hindsight_sampler=True),
                           pre_nohs.parent, seed=0)

    arms = args.arms.split(",")
    for arm in arms:
        cfg = arm_config(base, arm, pre_full, pre_nohs)
        cfg = replace(cfg, out=str(root / arm))
        done = all((root / arm / f"seed{s}" / "metrics.csv").exists() for s in seeds)
        if not done:
            print(f"[{arm}] training {len(seeds)} seeds x {args.steps} steps")
            train(cfg)
        emit_report(root / arm)
        print(f"[{arm}] final mean success {final_mean_success(root / arm / 'report'):.3f}")

    print(f"wall_time={time.monotonic() - t0:.0f}s")
    if set(arms) == set(ARMS):
        f = {arm: final_mean_success(root / arm / "report") for arm in ARMS}
        gap = f["full"] - f["flat"]
        print(f"full={f['full']:.3f} no-hs={f['no-hs']:.3f} "
              f"no-vs={f['no-vs']:.3f} flat={f['flat']:.3f} gap_vs_flat={gap:+.3f}")
        ok = gap >= 0.20 and f["full"] > f["no-hs"] and f["full"] > f["no-vs"]
        print("PASS" if ok else "FAIL")
        return 0 if ok else 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
