"""End-to-end checks of the eisp command line (subprocess level)."""

import subprocess
import sys

import pytest

from eisp.harness import RunConfig, save_config


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "eisp.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )


@pytest.fixture()
def tiny_config(tmp_path):
    cfg = RunConfig(
        env="pointrooms-1",
        seeds=(0,),
        total_steps=500,
        eval_every=500,
        eval_episodes=2,
        warmup_steps=200,
        buffer_capacity=50,
        batch_size=64,
        pretrain_steps=0,
    )
    path = tmp_path / "tiny.cfg"
    save_config(path, cfg)
    return path


def test_no_subcommand_is_usage_error():
    r = run_cli()
    assert r.returncode == 2
    assert "usage" in r.stderr


def test_bootstrap_writes_dataset(tmp_path):
    r = run_cli("bootstrap", "--env", "pointrooms-1", "--episodes", 5,
                "--seed", 1, "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    assert "scripted success rate" in r.stdout
    assert (tmp_path / "dataset.bin").exists()


def test_bootstrap_unknown_env_fails(tmp_path):
    r = run_cli("bootstrap", "--env", "gridhall-2", "--episodes", 1,
                "--out", tmp_path)
    assert r.returncode == 1
    err_lines = r.stderr.strip().splitlines()
    assert len(err_lines) == 1 and err_lines[0].startswith("error:")


def test_pretrain_from_dataset(tmp_path, tiny_config):
    run_cli("bootstrap", "--env", "pointrooms-1", "--episodes", 5,
            "--out", tmp_path / "data")
    r = run_cli("pretrain", "--config", tiny_config,
                "--dataset", tmp_path / "data" / "dataset.bin",
                "--out", tmp_path / "pre", "--steps", 10)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "pre" / "generator.bin").exists()
    assert (tmp_path / "pre" / "pretrain_loss.csv").exists()


def test_train_with_seed_override(tmp_path, tiny_config):
    out = tmp_path / "run"
    r = run_cli("train", "--config", tiny_config, "--seed", 7, "--out", out)
    assert r.returncode == 0, r.stderr
    assert "finished" in r.stdout
    assert (out / "seed7" / "metrics.csv").exists()
    assert not (out / "seed0").exists()


def test_train_flat_ablation_skips_generator(tmp_path, tiny_config):
    out = tmp_path / "run"
    r = run_cli("train", "--config", tiny_config, "--seed", 0, "--out", out,
                "--ablation", "flat")
    assert r.returncode == 0, r.stderr
    assert (out / "seed0" / "sac.bin").exists()
    assert not (out / "seed0" / "generator.bin").exists()


def test_eval_and_report_roundtrip(tmp_path, tiny_config):
    out = tmp_path / "run"
    run_cli("train", "--config", tiny_config, "--seed", 0, "--out", out)
    r = run_cli("eval", "--sac", out / "seed0" / "sac.bin",
                "--generator", out / "seed0" / "generator.bin",
                "--env", "pointrooms-1", "--episodes", 5, "--T", 10)
    assert r.returncode == 0, r.stderr
    assert r.stdout.startswith("success_rate=")
    r2 = run_cli("report", "--out", out)
    assert r2.returncode == 0, r2.stderr
    assert (out / "report" / "success.csv").exists()
    assert (out / "report" / "success.png").exists()


def test_bad_config_key_is_diagnosed(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("momentum = 0.9\n")
    r = run_cli("train", "--config", bad)
    assert r.returncode == 1
    assert r.stderr.startswith("error:")
    assert "unknown config key" in r.stderr


def test_eval_missing_checkpoint_fails(tmp_path):
    r = run_cli("eval", "--sac", tmp_path / "nope.bin", "--env", "pointrooms-1")
    assert r.returncode == 1
    assert r.stderr.startswith("error:")


def test_unknown_ablation_rejected(tmp_path, tiny_config):
    r = run_cli("train", "--config", tiny_config, "--ablation", "no-critic")
    assert r.returncode == 2  # argparse choices
