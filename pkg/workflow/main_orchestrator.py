# Main workflow orchestrator
"""
Subcommands of the experiment harness.

Every ``cmd_*`` function returns a process exit code: 0 on success, 2 for
configuration, usage or malformed-input errors, 3 when training diverged.
All files are written through ``utils.io`` (temp file + rename).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np

from algos.trainer import Trainer, TrainingDivergedError, TrainState
from config.run_config import ConfigError, RunConfig, load_config
from envs import make_env, true_pareto_front
from envs.base import EnvError, MOEnv, UnsupportedEnvError
from metrics.evaluation import (
    evaluate_returns,
    metrics_report,
    read_front_csv,
    render_report,
    write_front_csv,
    write_report,
)
from metrics.pareto import MetricsError, pareto_filter
from momdp.popart import PopArtStats
from momdp.rollout import dump_trajectories
from ndgrad.checkpoint import Checkpoint, load, save
from ndgrad.errors import CheckpointError
from ndgrad.params import ParamTree
from nets.actor_critic import ActorCriticNet, ActorCriticPolicy
from nets.config import ArchError
from utils.io import atomic_write_text
from utils.logger import add_run_sink, logger
from utils.seeding import RngStreams
from workflow.plotting import plot_fronts

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FAILURE = 3

PACKAGE_NAME = "dmorl-agent"


def code_version() -> str:
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Resolved config snapshot plus run bookkeeping; written once at run end."""

    command: str
    config: Dict[str, Any]
    started_at: str
    finished_at: str = ""
    code_version: str = field(default_factory=code_version)
    status: str = "ok"
    metrics: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write(self, path: Path) -> Path:
        self.finished_at = self.finished_at or _now()
        return atomic_write_text(path, json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")

    @classmethod
    def read(cls, path: Path) -> "RunManifest":
        with Path(path).open(encoding="utf-8") as handle:
            return cls(**json.load(handle))


# ----------------------------------------------------------------------
# checkpoints
# ----------------------------------------------------------------------


def state_to_checkpoint(state: TrainState, config: RunConfig) -> Checkpoint:
    return Checkpoint(
        params=state.params,
        optimizers=state.optimizers,
        extra={"popart": state.popart.as_array()},
        metadata={
            "config": config.to_dict(),
            "lam": state.lam,
            "beta_c": state.beta_c,
            "popart_enabled": state.popart.enabled,
            "popart_step_size": state.popart.step_size,
        },
    )


def check_compatible(net: ActorCriticNet, params: ParamTree) -> None:
    """Raises ArchError unless ``params`` has exactly the entries and shapes ``net`` builds."""
    expected = net.build(np.random.default_rng(0))
    missing = sorted(set(expected) - set(params))
    unexpected = sorted(set(params) - set(expected))
    if missing or unexpected:
        raise ArchError(f"Checkpoint does not match the architecture: missing {missing}, unexpected {unexpected}")
    for name in expected:
        if expected.value(name).shape != params.value(name).shape:
            raise ArchError(
                f"Checkpoint entry '{name}' has shape {params.value(name).shape}, "
                f"architecture expects {expected.value(name).shape}"
            )


def checkpoint_to_state(checkpoint: Checkpoint, net: ActorCriticNet) -> TrainState:
    check_compatible(net, checkpoint.params)
    meta = checkpoint.metadata
    if "popart" not in checkpoint.extra:
        raise CheckpointError("Checkpoint has no PopArt statistics")
    mu, second_moment = checkpoint.extra["popart"]
    if len(mu) != net.spec.num_objectives:
        raise ArchError(
            f"Checkpoint has {len(mu)} objectives, environment has {net.spec.num_objectives}"
        )
    popart = PopArtStats(
        mu.copy(),
        second_moment.copy(),
        step_size=float(meta.get("popart_step_size", 0.001)),
        enabled=bool(meta.get("popart_enabled", True)),
    )
    return TrainState(
        checkpoint.params,
        checkpoint.optimizers,
        popart,
        float(meta.get("lam", 0.0)),
        float(meta.get("beta_c", 1.0)),
    )


def build_env(config: RunConfig) -> MOEnv:
    return make_env(config.env.id, config.env.options())


def reference_front(env: MOEnv, gamma: float) -> Optional[np.ndarray]:
    try:
        return true_pareto_front(env, gamma)
    except UnsupportedEnvError:
        return None


# ----------------------------------------------------------------------
# train
# ----------------------------------------------------------------------


def cmd_train(
    config_path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    resume: Optional[Path] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> int:
    """
    Trains one run and writes ``metrics.csv``, ``checkpoints/`` and ``manifest.json``
    under ``run.out_dir``.

    Args:
        config_path: Optional YAML config file.
        overrides: ``section.key`` -> value from the command line.
        resume: Checkpoint to continue from; its parameters, optimizer state,
            PopArt statistics, λ and β_c are restored.
        environ: Environment variables for ``DMORL_*`` overrides.
    """
    started = _now()
    try:
        config = load_config(config_path, overrides, environ)
        env = build_env(config)
    except (ConfigError, EnvError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE

    out_dir = Path(config.run.out_dir)
    sink = add_run_sink(out_dir)
    manifest = RunManifest("train", config.to_dict(), started)
    try:
        logger.info(f"Run directory: {out_dir} (seed {config.run.seed})")
        streams = RngStreams(config.run.seed)
        state = None
        if resume is not None:
            try:
                state = checkpoint_to_state(load(resume), ActorCriticNet(config.arch, env.spec))
            except (CheckpointError, ArchError) as e:
                logger.error(f"Cannot resume from {resume}: {e}")
                return EXIT_USAGE
            logger.info(f"Resuming from {resume}")

        checkpoint_dir = out_dir / "checkpoints"

        def write_checkpoint(iteration: int, snapshot: TrainState) -> None:
            path = save(checkpoint_dir / f"iter_{iteration:06d}.ckpt", state_to_checkpoint(snapshot, config))
            logger.debug(f"Checkpoint written: {path}")

        trainer = Trainer(
            config.run.algo,
            config.train,
            config.entropy,
            env,
            config.arch,
            streams,
            state,
            config.run.rollout_workers,
            on_checkpoint=write_checkpoint,
        )
        try:
            result = trainer.run()
        except TrainingDivergedError as e:
            logger.error(f"Training diverged: {e}")
            manifest.status = "diverged"
            manifest.write(out_dir / "manifest.json")
            return EXIT_FAILURE

        result.log.write(out_dir / "metrics.csv")
        final = save(checkpoint_dir / "final.ckpt", state_to_checkpoint(result.state, config))
        logger.success(f"Final checkpoint written: {final}")
        if config.run.dump_trajectories and result.last_batch is not None:
            dump_trajectories(out_dir / "trajectories.csv", result.last_batch)

        last = result.log.rows[-1] if result.log.rows else None
        manifest.metrics = {
            "iterations": float(result.iterations),
            "env_steps": float(result.env_steps),
            "resets": float(result.resets),
            "discarded": float(sum(row.discarded for row in result.log.rows)),
        }
        if last is not None:
            manifest.metrics["final_mean_scalarized_return"] = last.mean_scalarized_return
            manifest.metrics["final_entropy"] = last.entropy
        if config.run.eval_after_train:
            policy = ActorCriticPolicy(trainer.net, result.state.params, result.state.popart)
            manifest.metrics.update(evaluate_to_dir(policy, env, config, out_dir / "eval"))
        manifest.write(out_dir / "manifest.json")
        return EXIT_OK
    finally:
        logger.remove(sink)


# ----------------------------------------------------------------------
# eval
# ----------------------------------------------------------------------


def evaluate_to_dir(policy: ActorCriticPolicy, env: MOEnv, config: RunConfig, out_dir: Path) -> Dict[str, float]:
    """
    Evaluates at the protocol discount and at γ = 1, writes ``front.csv``,
    ``front_gamma1.csv`` and the ``metrics.csv`` report; returns the report.
    """
    protocol = config.eval
    gammas = (protocol.gamma,) if protocol.gamma == 1.0 else (protocol.gamma, 1.0)
    sweep = evaluate_returns(policy, env, protocol, gammas)

    report: Dict[str, float] = {}
    for gamma in gammas:
        suffix = "" if gamma == protocol.gamma else "_gamma1"
        returns = sweep.returns[gamma]
        write_front_csv(out_dir / f"front{suffix}.csv", sweep.alphas, returns)
        report.update(
            metrics_report(sweep.alphas, returns, env.reference_point(gamma), reference_front(env, gamma), suffix)
        )
    if protocol.gamma == 1.0:
        write_front_csv(out_dir / "front_gamma1.csv", sweep.alphas, sweep.returns[1.0])
    write_report(out_dir / "metrics.csv", report)
    logger.success(f"Evaluation done: {', '.join(f'{k}={v:.4f}' for k, v in report.items())}")
    return report


def cmd_eval(
    checkpoint_path: Path,
    out_dir: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> int:
    """
    Evaluates a checkpoint on the weight grid of the evaluation protocol.

    The config snapshot stored in the checkpoint is authoritative; ``overrides``
    may change ``eval.*`` keys and the environment (``env.*``), which is then
    checked against the checkpoint's shapes.
    """
    started = _now()
    try:
        checkpoint = load(checkpoint_path)
    except CheckpointError as e:
        logger.error(f"Cannot read checkpoint {checkpoint_path}: {e}")
        return EXIT_USAGE
    snapshot = checkpoint.metadata.get("config")
    if not isinstance(snapshot, dict):
        logger.error(f"Checkpoint {checkpoint_path} carries no config snapshot")
        return EXIT_USAGE
    try:
        config = load_config(sections=snapshot, overrides=overrides, environ={})
        env = build_env(config)
        net = ActorCriticNet(config.arch, env.spec)
        state = checkpoint_to_state(checkpoint, net)
    except (ConfigError, EnvError, ArchError, CheckpointError) as e:
        logger.error(f"Checkpoint is not compatible with the requested evaluation: {e}")
        return EXIT_USAGE

    out_dir = Path(out_dir) if out_dir is not None else Path(checkpoint_path).resolve().parent.parent / "eval"
    logger.info(f"Evaluating {checkpoint_path} on {env.env_id} into {out_dir}")
    policy = ActorCriticPolicy(net, state.params, state.popart)
    report = evaluate_to_dir(policy, env, config, out_dir)
    RunManifest("eval", config.to_dict(), started, metrics=report).write(out_dir / "manifest.json")
    return EXIT_OK


# ----------------------------------------------------------------------
# metrics
# ----------------------------------------------------------------------


def cmd_metrics(
    front_path: Path,
    reference: Optional[Sequence[float]] = None,
    env_id: Optional[str] = None,
    gamma: float = 0.99,
    out: Optional[Path] = None,
) -> int:
    """
    Recomputes hv, eu and (with an oracle front) mul from a front file alone.

    The reference point is ``reference`` when given, otherwise the reference of
    ``env_id`` at ``gamma``; mul needs ``env_id`` with a known front.
    """
    try:
        alphas, returns = read_front_csv(front_path)
        oracle = None
        if env_id is not None:
            env = make_env(env_id)
            oracle = reference_front(env, gamma)
            if reference is None:
                reference = env.reference_point(gamma)
        if reference is None:
            raise MetricsError("Need --reference or --env to choose a hypervolume reference point")
        reference = np.asarray(reference, dtype=np.float64)
        if returns.size and len(reference) != returns.shape[1]:
            raise MetricsError(f"Reference has {len(reference)} objectives, front has {returns.shape[1]}")
        report = metrics_report(alphas, returns, reference, oracle)
    except (MetricsError, EnvError) as e:
        logger.error(f"Cannot compute metrics: {e}")
        return EXIT_USAGE

    text = render_report(report)
    print(text, end="")
    if out is not None:
        write_report(out, report)
        logger.success(f"Metrics report written: {out}")
    return EXIT_OK


# ----------------------------------------------------------------------
# plot
# ----------------------------------------------------------------------


def cmd_plot(
    front_paths: Sequence[Path],
    output: Path,
    oracle_env: Optional[str] = None,
    gamma: float = 0.99,
) -> int:
    """Scatter of the nondominated points of each front file (K = 2 only) as SVG."""
    try:
        fronts = []
        for path in front_paths:
            _, returns = read_front_csv(path)
            fronts.append(pareto_filter(returns).points if len(returns) else returns)
        oracle = None
        if oracle_env is not None:
            oracle = reference_front(make_env(oracle_env), gamma)
        plot_fronts(output, fronts, [Path(p).stem for p in front_paths], oracle)
    except (MetricsError, EnvError) as e:
        logger.error(f"Cannot plot: {e}")
        return EXIT_USAGE
    logger.success(f"Plot written: {output}")
    return EXIT_OK
