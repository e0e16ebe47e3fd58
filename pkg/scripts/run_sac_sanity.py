"""Flat goal-conditioned SAC benchmark on the single-room environment.

Runs the low-level learner alone (no subgoals) for a handful of seeds and
reports the final evaluation success rate per seed. Passing bar: at least
four of five seeds at or above 90% success.
"""

import os

os.environ.setdefault("OMP_NUM_THREADS", "1")

import argparse
import time
from pathlib import Path

from eisp.harness import RunConfig, emit_report, train


def final_success(run_dir: Path) -> float:
    last = (run_dir / "metrics.csv").read_text().strip().splitlines()[-1]
    return float(last.split(",")[1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/sac_sanity")
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--eval-episodes", type=int, default=100)
    args = ap.parse_args()

    seeds = tuple(int(s) for s in args.seeds.split(","))
    cfg = RunConfig(
        env="pointrooms-1",
        seeds=seeds,
        out=args.out,
        total_steps=args.steps,
        eval_every=20_000,
        eval_episodes=args.eval_episodes,
        flat_baseline=True,
    )
    t0 = time.monotonic()
    dirs = train(cfg)
    emit_report(Path(args.out))

    finals = {d.name: final_success(d) for d in dirs}
    passing = sum(1 for v in finals.values() if v >= 0.9)
    for name, v in sorted(finals.items()):
        print(f"{name}: final_success={v:.3f}")
    print(f"wall_time={time.monotonic() - t0:.0f}s")
    print(f"{passing}/{len(finals)} seeds at >= 0.90")
    ok = passing >= min(4, len(finals))
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
