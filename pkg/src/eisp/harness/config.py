"""Run configuration: a flat key=value text format with typed parsing.

Unknown keys are errors. Values are parsed per-field: ints, floats,
bools (true/false), comma-separated int tuples, and strings. A config
snapshot can be serialized back out canonically so run directories are
self-describing.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


@dataclass
class RunConfig:
    env: str = "pointrooms-2"
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    out: str = "runs/default"

    total_steps: int = 500_000
    eval_every: int = 25_000
    eval_episodes: int = 100
    warmup_steps: int = 1_000

    sac_lr: float = 3e-4
    gen_lr: float = 1e-3
    buffer_capacity: int = 2_000
    batch_size: int = 256
    update_every: int = 2
    finetune_every: int = 10
    finetune_batch: int = 64

    T: int = 30
    n: int = 4
    K: int = 16
    beta: float = 0.01
    alpha: float = 0.01
    gamma: float = 0.99
    tau: float = 0.005
    hidden: tuple[int, ...] = (64, 64)
    family: str = "laplace"

    her_mode: str = "future"
    her_ratio: float = 0.8

    pretrained_generator: str = ""
    pretrain_steps: int = 2_000
    pretrain_batch: int = 64

    no_hindsight_sampler: bool = False
    no_value_selector: bool = False
    flat_baseline: bool = False
    log_decisions: bool = False

    def validate(self) -> None:
        if self.sac_lr <= 0.0 or self.gen_lr <= 0.0:
            raise ValueError("learning rates must be positive")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.total_steps < 0:
            raise ValueError("total_steps must be non-negative")
        if self.eval_every < 1 or self.eval_episodes < 1:
            raise ValueError("eval cadence and episode count must be positive")
        if self.batch_size < 1 or self.buffer_capacity < 1:
            raise ValueError("batch_size and buffer_capacity must be positive")
        if self.update_every < 1 or self.finetune_every < 1:
            raise ValueError("update_every and finetune_every must be positive")
        if not 0.0 <= self.her_ratio <= 1.0:
            raise ValueError("her_ratio must lie in [0, 1]")
        if self.her_mode not in ("future", "final", "none"):
            raise ValueError(f"unknown her_mode {self.her_mode!r}")
        if self.beta < 0.0:
            raise ValueError("beta must be non-negative")
        if self.T < 1 or self.K < 1 or self.n < 2:
            raise ValueError("T and K must be >= 1, n >= 2")
        if self.pretrain_steps < 0:
            raise ValueError("pretrain_steps must be non-negative")
        if not self.hidden:
            raise ValueError("hidden sizes must be non-empty")


def _parse_value(name: str, kind, raw: str):
    raw = raw.strip()
    if kind is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"{name}: expected true/false, got {raw!r}")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind is str:
        return raw
    # tuple[int, ...]
    if raw == "":
        raise ValueError(f"{name}: empty list")
    return tuple(int(part) for part in raw.split(","))


def parse_config(text: str) -> RunConfig:
    known = {f.name: f for f in fields(RunConfig)}
    # dataclass stores annotations as strings under future-import semantics
    type_map = {
        "str": str, "int": int, "float": float, "bool": bool,
        "tuple[int, ...]": tuple,
    }
    cfg = RunConfig()
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = body.split("=", 1)
        key = key.strip()
        if key not in known:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        if key in seen:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        ann = known[key].type
        kind = type_map.get(ann if isinstance(ann, str) else ann.__name__, None)
        if kind is None:
            raise ValueError(f"{key}: unhandled field type {ann!r}")
        setattr(cfg, key, _parse_value(key, kind, raw))
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def format_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def save_config(path, cfg: RunConfig) -> None:
    Path(path).write_text(format_config(cfg))
