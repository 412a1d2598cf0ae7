"""
MOPPO and MOA2C training loops.

One iteration samples B trajectories, each under its own weight drawn from
the simplex, then runs the algorithm's epochs over that batch. Every epoch
first recomputes the bootstrapped targets, updates PopArt and recomputes
advantages. With a shared trunk actor and critic are trained by one Adam on
``-(g + ∇l_a) + β_c ∇l_c``; otherwise the critic gets F passes on its own
Adam (learning rate η / C) before the actor is updated.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from algos.balancing import update_beta
from algos.discard import DiscardAction, DiscardState, check_discard
from algos.entropy import EntropyConfig, EntropyController, entropy_step
from algos.losses import (
    Minibatch,
    a2c_objective,
    critic_objective,
    grads_of,
    mean_entropy,
    ppo_objective,
)
from algos.metrics_log import MetricsLog, MetricsRow
from envs.base import MOEnv
from momdp.popart import PopArtStats, popart_update
from momdp.returns import advantages, reward_to_go
from momdp.rollout import TrajectoryBatch, collect_batch
from momdp.weights import sample_weight
from ndgrad.errors import NonFiniteError
from ndgrad.optim import AdamState, adam_step, clip_global_norm
from ndgrad.params import ParamTree
from ndgrad.tensor import Tape, Tensor
from nets.actor_critic import ActorCriticNet, ActorCriticPolicy
from nets.config import ArchConfig
from utils.logger import logger
from utils.seeding import RngStreams

ALGOS = ("moppo", "moa2c")
Grads = Dict[str, np.ndarray]
Objective = Callable[[Tensor, Minibatch], Tensor]


class TrainingDivergedError(RuntimeError):
    """Raised when the policy keeps collapsing after ``max_resets`` checkpoint resets."""


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    batch_trajectories: int = 8
    ppo_epochs: int = 4
    a2c_epochs: int = 1
    minibatches: int = 8
    clip_eps: float = 0.2
    total_steps: int = 100_000
    lr: float = 1e-3
    critic_ratio: float = 1.0
    critic_updates: int = 2
    delta: float = 0.001
    beta_init: float = 1.0
    max_grad_norm: float = 0.5
    critic_max_grad_norm: float = 0.5
    critic_weight_decay: float = 0.01
    popart_step_size: float = 0.001
    use_popart: Optional[bool] = None
    normalized_scalarization: bool = True
    dynamic_beta: bool = True
    max_episode_steps: Optional[int] = None
    checkpoint_interval: int = 50
    discard_warmup: int = 30
    discard_window: int = 100
    discard_budget: int = 5
    collapse_steps: int = 200
    max_resets: int = 3
    log_interval: int = 10

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def default_h_min(env_id: str) -> float:
    return 0.1 if env_id == "dst" else 0.4


def default_use_popart(arch: ArchConfig) -> bool:
    return not arch.is_hypernet


@dataclass
class TrainState:
    """Everything an iteration may change, and a checkpoint or a rollback restores."""

    params: ParamTree
    optimizers: Dict[str, AdamState]
    popart: PopArtStats
    lam: float
    beta_c: float

    def copy(self) -> "TrainState":
        return TrainState(
            self.params.copy(),
            {key: opt.copy() for key, opt in self.optimizers.items()},
            self.popart.copy(),
            self.lam,
            self.beta_c,
        )


@dataclass
class TrainResult:
    state: TrainState
    log: MetricsLog
    env_steps: int = 0
    iterations: int = 0
    resets: int = 0
    last_batch: Optional[TrajectoryBatch] = None

    @property
    def params(self) -> ParamTree:
        return self.state.params


@dataclass
class _UpdateStats:
    actor_norms: List[float] = field(default_factory=list)
    critic_norms: List[float] = field(default_factory=list)

    def actor_norm(self) -> float:
        return float(np.mean(self.actor_norms)) if self.actor_norms else 0.0

    def critic_norm(self) -> float:
        return float(np.mean(self.critic_norms)) if self.critic_norms else 0.0


def _norm(grads: Grads) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


class Trainer:
    """
    Args:
        algo: ``moppo`` or ``moa2c``.
        config: Training hyperparameters.
        entropy: Entropy-control settings; MOA2C always uses the fixed bonus.
        env: Environment; B copies are spawned for the rollouts.
        arch: Network architecture.
        streams: Random streams of the run.
        state: Initial state, e.g. loaded from a checkpoint; built from
            ``streams.init()`` when omitted.
        rollout_workers: Threads used to sample one batch.
        on_checkpoint: Called with (iteration, state) whenever the in-memory
            checkpoint is refreshed.
    """

    def __init__(
        self,
        algo: str,
        config: TrainConfig,
        entropy: EntropyConfig,
        env: MOEnv,
        arch: ArchConfig,
        streams: RngStreams,
        state: Optional[TrainState] = None,
        rollout_workers: int = 1,
        on_checkpoint: Optional[Callable[[int, TrainState], None]] = None,
    ):
        if algo not in ALGOS:
            raise ValueError(f"Unknown algorithm '{algo}', expected one of {ALGOS}")
        self.algo = algo
        self.config = config
        self.env = env
        self.arch = arch
        self.streams = streams
        self.rollout_workers = rollout_workers
        self.on_checkpoint = on_checkpoint
        self.net = ActorCriticNet(arch, env.spec)
        self.envs = [env.spawn() for _ in range(config.batch_trajectories)]
        self.max_steps = config.max_episode_steps or env.spec.max_episode_steps

        if algo == "moa2c" and entropy.schedule != "fixed":
            logger.info("MOA2C uses a fixed entropy bonus; ignoring the entropy schedule")
            entropy = EntropyConfig(**{**entropy.to_dict(), "schedule": "fixed"})
        h_min = entropy.h_min if entropy.h_min is not None else default_h_min(env.env_id)
        self.controller = EntropyController.from_config(entropy, env.spec.num_actions, config.lr, h_min)

        self.state = state if state is not None else self._initial_state()
        self.controller.lam = self.state.lam
        self.discard = DiscardState(
            warmup=config.discard_warmup,
            window=config.discard_window,
            budget=config.discard_budget,
            collapse_steps=config.collapse_steps,
        )
        self.env_steps = 0
        self.iteration = 0
        self.resets = 0

    def _initial_state(self) -> TrainState:
        cfg = self.config
        params = self.net.build(self.streams.init())
        use_popart = cfg.use_popart if cfg.use_popart is not None else default_use_popart(self.arch)
        popart = PopArtStats.initial(self.env.spec.num_objectives, cfg.popart_step_size, use_popart)
        if self.arch.shared_trunk:
            optimizers = {
                "shared": AdamState.for_params(params, lr=cfg.lr, weight_decay=cfg.critic_weight_decay)
            }
        else:
            optimizers = {
                "actor": AdamState.for_params(params, params.actor_names(), lr=cfg.lr),
                "critic": AdamState.for_params(
                    params,
                    params.critic_names(),
                    lr=cfg.lr / cfg.critic_ratio,
                    weight_decay=cfg.critic_weight_decay,
                ),
            }
        return TrainState(params, optimizers, popart, self.controller.lam, cfg.beta_init)

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    @property
    def params(self) -> ParamTree:
        return self.state.params

    def policy(self) -> ActorCriticPolicy:
        return ActorCriticPolicy(self.net, self.state.params, self.state.popart)

    def progress(self) -> float:
        return min(self.env_steps / self.config.total_steps, 1.0) if self.config.total_steps else 1.0

    def _sample(self) -> TrajectoryBatch:
        k = self.env.spec.num_objectives
        rngs = [self.streams.trajectory(self.iteration, i) for i in range(len(self.envs))]
        alphas = [sample_weight(rng, k) for rng in rngs]
        env_rngs = [self.streams.env(self.iteration, i) for i in range(len(self.envs))]
        return collect_batch(
            self.envs, self.policy(), alphas, self.max_steps, rngs, env_rngs, self.rollout_workers
        )

    def batch_entropy(self, batch: TrajectoryBatch) -> float:
        states = np.concatenate([t.states for t in batch])
        alphas = np.concatenate([t.alphas() for t in batch])
        probs = self.policy().action_probs(states, alphas)
        return float(np.mean(-np.sum(probs * np.log(np.clip(probs, 1e-300, None)), axis=1)))

    def _prepare(self, batch: TrajectoryBatch) -> Minibatch:
        """Targets, PopArt update and advantages for one epoch."""
        cfg = self.config
        critic = self.policy()
        q_hats = [reward_to_go(traj, cfg.gamma, critic) for traj in batch]
        popart_update(self.state.popart, self.net.critic_head(self.params), np.concatenate(q_hats))
        critic = self.policy()
        scalar = [
            advantages(traj, q, critic, self.state.popart.sigma, cfg.normalized_scalarization)[1]
            for traj, q in zip(batch, q_hats)
        ]
        return Minibatch.from_batch(batch, np.concatenate(q_hats), np.concatenate(scalar), cfg.gamma)

    def _splits(self, size: int, epoch: int, phase: int) -> List[np.ndarray]:
        order = self.streams.minibatch(self.iteration, epoch, phase).permutation(size)
        return [chunk for chunk in np.array_split(order, self.config.minibatches) if len(chunk)]

    def _clip_and_step(self, optimizer: AdamState) -> None:
        actor_side = [n for n in optimizer.names if ParamTree.owner(n) != "critic"]
        critic_side = [n for n in optimizer.names if ParamTree.owner(n) == "critic"]
        if actor_side:
            clip_global_norm(self.params, self.config.max_grad_norm, actor_side)
        if critic_side:
            clip_global_norm(self.params, self.config.critic_max_grad_norm, critic_side)
        adam_step(self.params, optimizer)

    def _entropy_term(self, tape: Tape, entropy: Tensor) -> Grads:
        g, lam = entropy_step(
            self.controller,
            float(entropy.data),
            self.controller.target(self.progress()),
            grads_of(self.params, tape, entropy),
        )
        self.state.lam = lam if not self.controller.is_fixed else self.state.lam
        return g

    # ------------------------------------------------------------------
    # update steps
    # ------------------------------------------------------------------

    def _shared_step(self, mb: Minibatch, objective: Objective, stats: _UpdateStats) -> None:
        tape = Tape(self.params)
        out = self.net.outputs(tape, tape.constant(mb.states), tape.constant(mb.alphas))
        g = self._entropy_term(tape, mean_entropy(out["logits"]))
        actor_grads = grads_of(self.params, tape, objective(out["logits"], mb))
        critic_grads = grads_of(self.params, tape, critic_objective(out["values"], mb, self.state.popart))

        ascent = {name: g[name] + actor_grads[name] for name in actor_grads}
        actor_norm, critic_norm = _norm(ascent), _norm(critic_grads)
        if self.config.dynamic_beta:
            self.state.beta_c = update_beta(
                self.state.beta_c, actor_norm, critic_norm, self.config.critic_ratio, self.config.delta
            )
        self.params.set_grads(
            {name: -ascent[name] + self.state.beta_c * critic_grads[name] for name in ascent}
        )
        self._clip_and_step(self.state.optimizers["shared"])
        stats.actor_norms.append(actor_norm)
        stats.critic_norms.append(critic_norm)

    def _critic_step(self, mb: Minibatch, stats: _UpdateStats) -> None:
        tape = Tape(self.params)
        values = self.net.outputs(tape, tape.constant(mb.states), tape.constant(mb.alphas), actor=False)["values"]
        self.params.zero_grad()
        tape.backward(critic_objective(values, mb, self.state.popart))
        optimizer = self.state.optimizers["critic"]
        stats.critic_norms.append(self.params.global_grad_norm(optimizer.names))
        self._clip_and_step(optimizer)

    def _actor_step(self, mb: Minibatch, objective: Objective, stats: _UpdateStats) -> None:
        tape = Tape(self.params)
        logits = self.net.outputs(tape, tape.constant(mb.states), tape.constant(mb.alphas), critic=False)["logits"]
        g = self._entropy_term(tape, mean_entropy(logits))
        actor_grads = grads_of(self.params, tape, objective(logits, mb))
        optimizer = self.state.optimizers["actor"]
        ascent = {name: g[name] + actor_grads[name] for name in optimizer.names}
        self.params.zero_grad()
        self.params.set_grads({name: -grad for name, grad in ascent.items()})
        stats.actor_norms.append(_norm(ascent))
        self._clip_and_step(optimizer)

    def _update_moppo(self, batch: TrajectoryBatch) -> _UpdateStats:
        cfg = self.config
        stats = _UpdateStats()
        objective: Objective = lambda logits, mb: ppo_objective(logits, mb, cfg.clip_eps)  # noqa: E731
        for epoch in range(cfg.ppo_epochs):
            data = self._prepare(batch)
            if self.arch.shared_trunk:
                for index in self._splits(len(data), epoch, 0):
                    self._shared_step(data.subset(index), objective, stats)
            else:
                for phase in range(1, cfg.critic_updates + 1):
                    for index in self._splits(len(data), epoch, phase):
                        self._critic_step(data.subset(index), stats)
                for index in self._splits(len(data), epoch, 0):
                    self._actor_step(data.subset(index), objective, stats)
        return stats

    def _update_moa2c(self, batch: TrajectoryBatch) -> _UpdateStats:
        stats = _UpdateStats()
        for _ in range(self.config.a2c_epochs):
            data = self._prepare(batch)
            if self.arch.shared_trunk:
                self._shared_step(data, a2c_objective, stats)
            else:
                for _ in range(self.config.critic_updates):
                    self._critic_step(data, stats)
                self._actor_step(data, a2c_objective, stats)
        return stats

    # ------------------------------------------------------------------
    # main loop
    # ------------------------------------------------------------------

    def _restore(self, snapshot: TrainState) -> None:
        self.state = snapshot.copy()
        self.controller.lam = self.state.lam

    def run(self) -> TrainResult:
        cfg = self.config
        log = MetricsLog()
        logger.info(
            f"Training {self.algo} on {self.env.env_id}: arch={self.arch.kind}, "
            f"shared_trunk={self.arch.shared_trunk}, total_steps={cfg.total_steps}, "
            f"parameters={self.params.num_parameters()}"
        )
        checkpoint = self.state.copy()
        previous_reward = -np.inf
        last_batch: Optional[TrajectoryBatch] = None
        update = self._update_moppo if self.algo == "moppo" else self._update_moa2c

        while self.env_steps < cfg.total_steps:
            before = self.state.copy()
            batch = self._sample()
            last_batch = batch
            self.env_steps += batch.num_steps
            reward = batch.mean_scalarized_return()
            entropy = self.batch_entropy(batch)
            try:
                stats = update(batch)
                entropy_after = self.batch_entropy(batch)
            except NonFiniteError as e:
                logger.warning(f"Iteration {self.iteration}: non-finite update ({e}), rolling back")
                stats = _UpdateStats([float("nan")], [float("nan")])
                action = self.discard.force_discard()
            else:
                action = check_discard(
                    self.discard, entropy_after, entropy, reward, previous_reward, stats.actor_norm()
                )

            if action == DiscardAction.DISCARD_STEP:
                logger.warning(f"Iteration {self.iteration}: step discarded (entropy {entropy:.4f})")
                self._restore(before)
            elif action == DiscardAction.RESET_TO_CHECKPOINT:
                self.resets += 1
                if self.resets > cfg.max_resets:
                    logger.error(f"Training diverged: {self.resets - 1} checkpoint resets did not help")
                    raise TrainingDivergedError(
                        f"Policy collapsed again after {cfg.max_resets} checkpoint resets "
                        f"(iteration {self.iteration})"
                    )
                logger.warning(f"Iteration {self.iteration}: resetting to last checkpoint ({self.resets}/{cfg.max_resets})")
                self._restore(checkpoint)
            if (self.iteration + 1) % cfg.checkpoint_interval == 0:
                checkpoint = self.state.copy()
                if self.on_checkpoint is not None:
                    self.on_checkpoint(self.iteration + 1, checkpoint)

            log.append(
                MetricsRow(
                    iteration=self.iteration,
                    env_steps=self.env_steps,
                    mean_scalarized_return=reward,
                    entropy=entropy,
                    lam=self.controller.current_lambda,
                    beta_c=self.state.beta_c,
                    actor_grad_norm=stats.actor_norm(),
                    critic_grad_norm=stats.critic_norm(),
                    discarded=int(action != DiscardAction.ACCEPT),
                )
            )
            message = (
                f"iter {self.iteration} steps {self.env_steps}/{cfg.total_steps} "
                f"return {reward:.3f} entropy {entropy:.3f} lambda {self.controller.current_lambda:.5f} "
                f"beta_c {self.state.beta_c:.4f}"
            )
            if self.iteration % cfg.log_interval == 0:
                logger.info(message)
            else:
                logger.debug(message)
            previous_reward = reward
            self.iteration += 1

        logger.success(
            f"Training finished after {self.iteration} iterations, {self.env_steps} env steps, "
            f"{self.resets} resets"
        )
        return TrainResult(self.state, log, self.env_steps, self.iteration, self.resets, last_batch)


def train_moppo(
    config: TrainConfig,
    env: MOEnv,
    arch: ArchConfig,
    streams: RngStreams,
    entropy: Optional[EntropyConfig] = None,
    state: Optional[TrainState] = None,
    rollout_workers: int = 1,
) -> TrainResult:
    return Trainer("moppo", config, entropy or EntropyConfig(), env, arch, streams, state, rollout_workers).run()


def train_moa2c(
    config: TrainConfig,
    env: MOEnv,
    arch: ArchConfig,
    streams: RngStreams,
    entropy: Optional[EntropyConfig] = None,
    state: Optional[TrainState] = None,
    rollout_workers: int = 1,
) -> TrainResult:
    entropy = entropy or EntropyConfig(schedule="fixed")
    return Trainer("moa2c", config, entropy, env, arch, streams, state, rollout_workers).run()
