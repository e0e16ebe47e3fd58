"""Command-line entry point.

Subcommands: bootstrap, pretrain, train, eval, report. Exit code 0 on
success; failures print a one-line diagnostic to stderr and exit 1.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .envs.scripted import DEFAULT_NOISE_LEVEL
from .harness import (
    RunConfig,
    bootstrap_dataset,
    emit_report,
    evaluate_checkpoints,
    load_config,
    pretrain_generator,
    train,
)

ABLATIONS = ("no-hs", "no-vs", "flat")


def _apply_ablation(cfg: RunConfig, name: str | None) -> None:
    if name is None:
        return
    if name == "no-hs":
        cfg.no_hindsight_sampler = True
    elif name == "no-vs":
        cfg.no_value_selector = True
    elif name == "flat":
        cfg.flat_baseline = True
    else:
        raise ValueError(f"unknown ablation {name!r}")


def _load_cfg(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "env", None):
        cfg.env = args.env
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "seed", None) is not None:
        cfg.seeds = (args.seed,)
    _apply_ablation(cfg, getattr(args, "ablation", None))
    cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eisp", description="subgoal-planning lab")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bootstrap", help="collect scripted demo trajectories")
    b.add_argument("--env", required=True)
    b.add_argument("--episodes", type=int, default=3000)
    b.add_argument("--noise", type=float, default=DEFAULT_NOISE_LEVEL)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True, help="output directory")

    pr = sub.add_parser("pretrain", help="pretrain the subgoal generator")
    pr.add_argument("--config", default=None)
    pr.add_argument("--dataset", required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--steps", type=int, default=None)

    t = sub.add_parser("train", help="run the training loop")
    t.add_argument("--config", default=None)
    t.add_argument("--env", default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--out", default=None)
    t.add_argument("--ablation", choices=ABLATIONS, default=None)

    e = sub.add_parser("eval", help="evaluate saved checkpoints")
    e.add_argument("--sac", required=True)
    e.add_argument("--generator", default=None)
    e.add_argument("--env", required=True)
    e.add_argument("--episodes", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--T", type=int, default=30)
    e.add_argument("--K", type=int, default=16)

    r = sub.add_parser("report", help="aggregate per-seed metrics")
    r.add_argument("--out", required=True, help="run directory root")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bootstrap":
            path, rate = bootstrap_dataset(
                args.env, args.episodes, args.noise, args.seed,
                Path(args.out) / "dataset.bin",
            )
            print(f"wrote {path} (scripted success rate {rate:.3f})")
        elif args.command == "pretrain":
            cfg = load_config(args.config) if args.config else RunConfig()
            if args.steps is not None:
                cfg.pretrain_steps = args.steps
            ckpt = pretrain_generator(args.dataset, cfg, args.out, seed=args.seed)
            print(f"wrote {ckpt}")
        elif args.command == "train":
            cfg = _load_cfg(args)
            for d in train(cfg):
                print(f"finished {d}")
        elif args.command == "eval":
            row = evaluate_checkpoints(
                args.sac, args.env, args.episodes, args.seed,
                generator_path=args.generator, T=args.T, K=args.K,
            )
            print(
                f"success_rate={row.success_rate:.4f} mean_return={row.mean_return:.3f}"
            )
        elif args.command == "report":
            d = emit_report(args.out)
            print(f"wrote {d}")
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
