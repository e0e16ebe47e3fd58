from .config import RunConfig, format_config, load_config, parse_config, save_config
from .run import (
    CSV_HEADER,
    MetricsRow,
    bootstrap_dataset,
    emit_report,
    evaluate_checkpoints,
    pretrain_generator,
    run_eval_episodes,
    train,
    train_single_seed,
)

__all__ = [
    "CSV_HEADER",
    "MetricsRow",
    "RunConfig",
    "bootstrap_dataset",
    "emit_report",
    "evaluate_checkpoints",
    "format_config",
    "load_config",
    "parse_config",
    "pretrain_generator",
    "run_eval_episodes",
    "save_config",
    "train",
    "train_single_seed",
]
