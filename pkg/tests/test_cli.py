import json
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from algos import DiscardAction
from main import main, parse_sets
from metrics.evaluation import read_report, write_front_csv
from ndgrad.checkpoint import load
from utils.logger import logger
from workflow.main_orchestrator import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, RunManifest, cmd_metrics, cmd_plot

SMALL = [
    "--env", "dst",
    "--arch", "multi-body",
    "--steps", "120",
    "--seed", "3",
    "--set", "arch.hidden_dim=8",
    "--set", "train.max_episode_steps=30",
    "--set", "train.batch_trajectories=2",
    "--set", "train.ppo_epochs=1",
    "--set", "train.minibatches=2",
    "--set", "train.checkpoint_interval=1",
    "--set", "eval.grid_size=5",
    "--set", "eval.episodes=1",
]


@pytest.fixture
def errors():
    messages = []
    handler = logger.add(messages.append, level="ERROR", format="{message}")
    yield messages
    logger.remove(handler)


@pytest.fixture(autouse=True)
def no_env_overrides(monkeypatch):
    for name in list(os.environ):
        if name.startswith("DMORL_") and name != "DMORL_LOG_DIR":
            monkeypatch.delenv(name)


def train(out_dir, *extra):
    return main(["train", *SMALL, "--out-dir", str(out_dir), *extra])


def _svg_markers(svg_bytes, gid):
    root = ET.fromstring(svg_bytes)
    group = next(node for node in root.iter() if node.get("id") == gid)
    count = 0

    def walk(node):
        nonlocal count
        for child in node:
            tag = child.tag.rsplit("}", 1)[-1]
            if tag == "defs":
                continue
            if tag in ("use", "path"):
                count += 1
            walk(child)

    walk(group)
    return count


# ----------------------------------------------------------------------
# train
# ----------------------------------------------------------------------


def test_missing_env_is_a_usage_error(tmp_path, errors):
    assert main(["train", "--out-dir", str(tmp_path / "run")]) == EXIT_USAGE
    assert any("env.id" in message for message in errors)
    assert not (tmp_path / "run" / "manifest.json").exists()


def test_invalid_value_names_the_key(tmp_path, errors):
    assert train(tmp_path / "run", "--set", "train.clip_eps=2") == EXIT_USAGE
    assert any("train.clip_eps" in message for message in errors)


def test_usage_errors():
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["train", "--set", "no-dot"]) == EXIT_USAGE
    assert parse_sets(["train.lr=0.1", "env.id=dst"]) == {"train.lr": "0.1", "env.id": "dst"}


def test_train_writes_run_directory(run_dir):
    assert train(run_dir) == EXIT_OK
    header = (run_dir / "metrics.csv").read_text().splitlines()[0]
    assert header == "iteration,env_steps,mean_scalarized_return,entropy,lambda,beta_c,actor_grad_norm,critic_grad_norm,discarded"
    assert (run_dir / "checkpoints" / "final.ckpt").is_file()
    assert (run_dir / "checkpoints" / "iter_000001.ckpt").is_file()
    assert (run_dir / "train.log").is_file()
    manifest = RunManifest.read(run_dir / "manifest.json")
    assert manifest.status == "ok"
    assert manifest.command == "train"
    assert manifest.config["env"]["id"] == "dst"
    assert manifest.config["arch"]["hidden_dim"] == 8
    assert manifest.metrics["env_steps"] >= 120
    assert not (run_dir / "trajectories.csv").exists()


def test_training_is_reproducible(tmp_path):
    assert train(tmp_path / "a") == EXIT_OK
    assert train(tmp_path / "b") == EXIT_OK
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()
    first = load(tmp_path / "a" / "checkpoints" / "final.ckpt").params
    second = load(tmp_path / "b" / "checkpoints" / "final.ckpt").params
    for name in first:
        assert np.array_equal(first.value(name), second.value(name))


def test_trajectory_dump_and_eval_after_train(run_dir):
    code = train(run_dir, "--set", "run.dump_trajectories=true", "--set", "run.eval_after_train=true")
    assert code == EXIT_OK
    lines = (run_dir / "trajectories.csv").read_text().splitlines()
    assert lines[0] == "step,trajectory_id,action,done,r_1,r_2,logprob"
    report = read_report(run_dir / "eval" / "metrics.csv")
    assert {"hv", "eu", "mul", "hv_gamma1", "eu_gamma1", "mul_gamma1"} <= set(report)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["metrics"]["hv"] == report["hv"]


def test_resume_for_zero_steps_keeps_parameters(tmp_path):
    assert train(tmp_path / "a") == EXIT_OK
    source = tmp_path / "a" / "checkpoints" / "final.ckpt"
    code = main(["train", *SMALL, "--steps", "0", "--out-dir", str(tmp_path / "b"), "--resume", str(source)])
    assert code == EXIT_OK
    before = load(source)
    after = load(tmp_path / "b" / "checkpoints" / "final.ckpt")
    for name in before.params:
        assert np.array_equal(before.params.value(name), after.params.value(name))
    assert np.array_equal(before.extra["popart"], after.extra["popart"])
    assert before.metadata["lam"] == after.metadata["lam"]
    assert before.metadata["beta_c"] == after.metadata["beta_c"]


def test_resume_with_other_architecture_fails(tmp_path, errors):
    assert train(tmp_path / "a") == EXIT_OK
    source = tmp_path / "a" / "checkpoints" / "final.ckpt"
    code = main(["train", *SMALL, "--set", "arch.hidden_dim=16", "--out-dir", str(tmp_path / "b"), "--resume", str(source)])
    assert code == EXIT_USAGE


def test_divergence_exits_with_failure(run_dir, monkeypatch):
    monkeypatch.setattr("algos.trainer.check_discard", lambda *args: DiscardAction.RESET_TO_CHECKPOINT)
    assert train(run_dir, "--set", "train.max_resets=0") == EXIT_FAILURE
    assert RunManifest.read(run_dir / "manifest.json").status == "diverged"


# ----------------------------------------------------------------------
# eval and metrics
# ----------------------------------------------------------------------


def test_eval_then_metrics_agree(run_dir, tmp_path):
    assert train(run_dir) == EXIT_OK
    assert main(["eval", str(run_dir / "checkpoints" / "final.ckpt")]) == EXIT_OK
    eval_dir = run_dir / "eval"
    report = read_report(eval_dir / "metrics.csv")
    assert (eval_dir / "front_gamma1.csv").is_file()
    assert RunManifest.read(eval_dir / "manifest.json").command == "eval"

    out = tmp_path / "recomputed.csv"
    assert main(["metrics", str(eval_dir / "front.csv"), "--env", "dst", "--gamma", "0.99", "--out", str(out)]) == EXIT_OK
    recomputed = read_report(out)
    for key in ("hv", "eu", "mul"):
        assert recomputed[key] == pytest.approx(report[key], abs=1e-12)


def test_eval_overrides_and_errors(run_dir, tmp_path, errors):
    assert train(run_dir) == EXIT_OK
    checkpoint = str(run_dir / "checkpoints" / "final.ckpt")
    out = tmp_path / "eval3"
    assert main(["eval", checkpoint, "--out-dir", str(out), "--grid-size", "3", "--workers", "2"]) == EXIT_OK
    assert len((out / "front.csv").read_text().splitlines()) == 1 + 3
    assert main(["eval", checkpoint, "--env", "minecart"]) == EXIT_USAGE
    assert main(["eval", str(tmp_path / "missing.ckpt")]) == EXIT_USAGE


def test_metrics_singleton_and_empty_fronts(tmp_path, capsys):
    single = write_front_csv(tmp_path / "single.csv", np.array([[0.5, 0.5]]), np.array([[1.0, 1.0]]))
    out = tmp_path / "report.csv"
    assert cmd_metrics(single, reference=[0.0, 0.0], out=out) == EXIT_OK
    assert read_report(out)["hv"] == 1.0
    assert "metric,value" in capsys.readouterr().out

    empty = tmp_path / "empty.csv"
    empty.write_text("alpha_1,alpha_2,ret_1,ret_2\n")
    assert cmd_metrics(empty, reference=[0.0, 0.0], out=out) == EXIT_OK
    assert read_report(out) == {"hv": 0.0, "eu": 0.0}


def test_metrics_input_errors(tmp_path, errors):
    bad = tmp_path / "bad.csv"
    bad.write_text("alpha_1,alpha_2,ret_1,ret_2\n0.5,0.5,1.0\n")
    assert main(["metrics", str(bad), "--reference", "0,0"]) == EXIT_USAGE
    assert any("bad.csv:2:" in message for message in errors)

    good = write_front_csv(tmp_path / "good.csv", np.array([[0.5, 0.5]]), np.array([[1.0, 1.0]]))
    assert main(["metrics", str(good)]) == EXIT_USAGE
    assert main(["metrics", str(good), "--reference", "0,0,0"]) == EXIT_USAGE
    assert main(["metrics", str(good), "--env", "reacher"]) == EXIT_USAGE


# ----------------------------------------------------------------------
# plot
# ----------------------------------------------------------------------


def test_plot_draws_one_marker_per_point(tmp_path):
    alphas = np.array([[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]])
    front = write_front_csv(tmp_path / "front.csv", alphas, np.array([[1.0, -1.0], [0.5, -2.0], [8.0, -3.0]]))
    output = tmp_path / "fronts.svg"
    assert main(["plot", str(front), "--output", str(output)]) == EXIT_OK
    # (0.5, -2) 被 (1, -1) 支配, 不画
    assert _svg_markers(output.read_bytes(), "front-0") == 2


def test_plot_is_byte_identical_and_overlays_oracle(tmp_path):
    first = write_front_csv(tmp_path / "a.csv", np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([[1.0, -1.0], [8.0, -3.0]]))
    second = write_front_csv(tmp_path / "b.csv", np.array([[0.5, 0.5]]), np.array([[5.0, -2.0]]))
    outputs = [tmp_path / "one.svg", tmp_path / "two.svg"]
    for output in outputs:
        assert cmd_plot([first, second], output, oracle_env="dst") == EXIT_OK
    assert outputs[0].read_bytes() == outputs[1].read_bytes()
    svg = outputs[0].read_bytes()
    assert _svg_markers(svg, "front-0") == 2
    assert _svg_markers(svg, "front-1") == 1
    assert _svg_markers(svg, "oracle") == 10


def test_plot_rejects_three_objectives(tmp_path, errors):
    front = write_front_csv(tmp_path / "k3.csv", np.array([[0.2, 0.3, 0.5]]), np.array([[1.0, 2.0, 3.0]]))
    assert cmd_plot([front], tmp_path / "k3.svg") == EXIT_USAGE
    assert any("metrics" in message for message in errors)
    assert not (tmp_path / "k3.svg").exists()
