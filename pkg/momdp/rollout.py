from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, List, Optional, Protocol, Sequence

import numpy as np

from envs.base import MOEnv
from utils.io import write_csv

# 轨迹结束方式, 写入 trajectories.csv 的 done 列
RUNNING, TERMINAL, TRUNCATED = 0, 1, 2


class Policy(Protocol):
    def action_probs(self, states: np.ndarray, alphas: np.ndarray) -> np.ndarray:
        """(N, d_s), (N, K) -> (N, |A|) action probabilities."""


class Critic(Protocol):
    def values(self, states: np.ndarray, alphas: np.ndarray) -> np.ndarray:
        """(N, d_s), (N, K) -> (N, K) unnormalized vector values."""


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: np.ndarray
    log_prob: float
    done: int


@dataclass
class Trajectory:
    """
    One rollout under a fixed weight.

    ``bootstrap_state`` is set only when the rollout was truncated; it is the
    state reached after the last transition.
    """

    alpha: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    log_probs: np.ndarray
    terminal: bool
    bootstrap_state: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def truncated(self) -> bool:
        return not self.terminal

    def transitions(self) -> Iterator[Transition]:
        last = len(self) - 1
        end_flag = TERMINAL if self.terminal else TRUNCATED
        for t in range(len(self)):
            yield Transition(
                self.states[t],
                int(self.actions[t]),
                self.rewards[t],
                float(self.log_probs[t]),
                end_flag if t == last else RUNNING,
            )

    def alphas(self) -> np.ndarray:
        return np.tile(self.alpha, (len(self), 1))


@dataclass
class TrajectoryBatch:
    trajectories: List[Trajectory]

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    @property
    def num_steps(self) -> int:
        return int(sum(len(t) for t in self.trajectories))

    def mean_scalarized_return(self) -> float:
        """Mean over trajectories of the undiscounted αᵀΣr."""
        return float(np.mean([t.alpha @ t.rewards.sum(axis=0) for t in self.trajectories]))


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from a categorical distribution."""
    cdf = np.cumsum(probs)
    action = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(action, len(probs) - 1)


def rollout(
    env: MOEnv,
    policy: Policy,
    alpha: np.ndarray,
    max_steps: int,
    rng: np.random.Generator,
    env_rng: Optional[np.random.Generator] = None,
    greedy: bool = False,
) -> Trajectory:
    """
    Runs one episode conditioned on ``alpha``.

    The episode ends on a terminal step or after ``max_steps`` steps (capped
    by the environment's own horizon), in which case it is truncated and the
    final state is kept for bootstrapping.

    Args:
        rng: Action-sampling stream.
        env_rng: Stream for the environment's own randomness.
        greedy: Take the most probable action instead of sampling.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be positive, got {max_steps}")
    horizon = min(max_steps, env.spec.max_episode_steps)
    state = env.reset(env_rng)
    alpha_row = np.asarray(alpha, dtype=np.float64)[None, :]
    states, actions, rewards, log_probs = [], [], [], []
    terminal = False
    for _ in range(horizon):
        probs = policy.action_probs(state[None, :], alpha_row)[0]
        action = int(np.argmax(probs)) if greedy else sample_action(probs, rng)
        next_state, reward, terminal = env.step(action)
        states.append(state)
        actions.append(action)
        rewards.append(np.asarray(reward, dtype=np.float64))
        log_probs.append(float(np.log(probs[action])))
        state = next_state
        if terminal:
            break
    return Trajectory(
        alpha=np.asarray(alpha, dtype=np.float64),
        states=np.array(states),
        actions=np.array(actions, dtype=np.int64),
        rewards=np.array(rewards),
        log_probs=np.array(log_probs),
        terminal=terminal,
        bootstrap_state=None if terminal else state,
    )


def collect_batch(
    envs: Sequence[MOEnv],
    policy: Policy,
    alphas: Sequence[np.ndarray],
    max_steps: int,
    rngs: Sequence[np.random.Generator],
    env_rngs: Sequence[np.random.Generator],
    workers: int = 1,
) -> TrajectoryBatch:
    """
    Samples one trajectory per weight. Each trajectory has its own environment
    copy and streams, so the result does not depend on ``workers``.
    """
    jobs: List[Callable[[], Trajectory]] = [
        (lambda i=i: rollout(envs[i], policy, alphas[i], max_steps, rngs[i], env_rngs[i]))
        for i in range(len(alphas))
    ]
    if workers <= 1:
        return TrajectoryBatch([job() for job in jobs])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return TrajectoryBatch(list(pool.map(lambda job: job(), jobs)))


def dump_trajectories(path: Path, batch: TrajectoryBatch) -> Path:
    """Writes ``step,trajectory_id,action,done,r_1..r_K,logprob`` rows."""
    num_objectives = batch.trajectories[0].rewards.shape[1] if len(batch) else 0
    header = ["step", "trajectory_id", "action", "done"]
    header += [f"r_{k + 1}" for k in range(num_objectives)] + ["logprob"]
    rows = []
    for traj_id, traj in enumerate(batch):
        for step, tr in enumerate(traj.transitions()):
            rows.append([step, traj_id, tr.action, tr.done, *map(float, tr.reward), tr.log_prob])
    return write_csv(path, header, rows)
