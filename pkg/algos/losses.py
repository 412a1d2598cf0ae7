"""Actor and critic losses recorded on an ndgrad tape."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from momdp.popart import PopArtStats
from momdp.rollout import Critic, Trajectory, TrajectoryBatch
from momdp.returns import advantages as vector_advantages
from ndgrad import tensor as T
from ndgrad.params import ParamTree
from ndgrad.tensor import Tape, Tensor
from nets.actor_critic import ActorCriticNet

Grads = Dict[str, np.ndarray]


@dataclass
class Minibatch:
    """Flattened transitions with per-row weight, π_ref log-prob, advantage and target."""

    states: np.ndarray
    actions: np.ndarray
    alphas: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray
    q_hats: np.ndarray
    discounts: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    def subset(self, index: np.ndarray) -> "Minibatch":
        return Minibatch(
            self.states[index],
            self.actions[index],
            self.alphas[index],
            self.old_log_probs[index],
            self.advantages[index],
            self.q_hats[index],
            self.discounts[index],
        )

    @classmethod
    def from_batch(
        cls,
        batch: TrajectoryBatch,
        q_hats: np.ndarray,
        scalar_advantages: np.ndarray,
        gamma: float,
    ) -> "Minibatch":
        return cls(
            states=np.concatenate([t.states for t in batch]),
            actions=np.concatenate([t.actions for t in batch]),
            alphas=np.concatenate([t.alphas() for t in batch]),
            old_log_probs=np.concatenate([t.log_probs for t in batch]),
            advantages=np.asarray(scalar_advantages, dtype=np.float64),
            q_hats=np.asarray(q_hats, dtype=np.float64),
            discounts=np.concatenate([gamma ** np.arange(len(t)) for t in batch]),
        )


def clipped_surrogate(ratio: np.ndarray, advantage: np.ndarray, clip_eps: float) -> np.ndarray:
    """min(r Â, clip(r, 1-ε, 1+ε) Â), element-wise."""
    return np.minimum(ratio * advantage, np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantage)


def action_log_probs(logits: Tensor, actions: np.ndarray) -> Tensor:
    return T.take(T.log_softmax(logits), actions)


def mean_entropy(logits: Tensor) -> Tensor:
    """Ĥ: policy entropy averaged over the rows of ``logits``."""
    return T.mean(T.entropy_from_logits(logits))


def ppo_objective(logits: Tensor, mb: Minibatch, clip_eps: float) -> Tensor:
    """Ascent objective Σ_k min(r_k Â_k, clip(r_k) Â_k) with r_k = π_θ / π_ref."""
    ratio = T.exp(T.sub(action_log_probs(logits, mb.actions), mb.old_log_probs))
    unclipped = T.mul(ratio, mb.advantages)
    clipped = T.mul(T.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps), mb.advantages)
    return T.sum(T.minimum(unclipped, clipped))


def a2c_objective(logits: Tensor, mb: Minibatch) -> Tensor:
    """Σ_t γ^t Â_t log π(a_t | s_t, α); its gradient is the A2C estimator."""
    weights = mb.discounts * mb.advantages
    return T.sum(T.mul(action_log_probs(logits, mb.actions), weights))


def critic_objective(values: Tensor, mb: Minibatch, popart: PopArtStats) -> Tensor:
    """Σ ||v_norm - (q̂ - μ)/σ||², minimized."""
    return T.sum(T.square(T.sub(values, popart.normalize(mb.q_hats))))


def grads_of(params: ParamTree, tape: Tape, output: Tensor) -> Grads:
    params.zero_grad()
    tape.backward(output)
    grads = params.grads()
    params.zero_grad()
    return grads


def ppo_actor_loss(
    net: ActorCriticNet, params: ParamTree, mb: Minibatch, clip_eps: float
) -> Tuple[float, Grads]:
    """
    PPO clipped loss on one minibatch.

    Returns:
        The loss (negated ascent objective) and its gradient for every entry.
    """
    tape = Tape(params)
    logits = net.outputs(tape, tape.constant(mb.states), tape.constant(mb.alphas), critic=False)["logits"]
    loss = T.neg(ppo_objective(logits, mb, clip_eps))
    return float(loss.data), grads_of(params, tape, loss)


def critic_loss(
    net: ActorCriticNet, params: ParamTree, mb: Minibatch, popart: PopArtStats
) -> Tuple[float, Grads]:
    tape = Tape(params)
    values = net.outputs(tape, tape.constant(mb.states), tape.constant(mb.alphas), actor=False)["values"]
    loss = critic_objective(values, mb, popart)
    return float(loss.data), grads_of(params, tape, loss)


def a2c_gradient(
    net: ActorCriticNet,
    params: ParamTree,
    traj: Trajectory,
    q_hats: np.ndarray,
    critic: Critic,
    popart: PopArtStats,
    gamma: float,
    normalized: bool = True,
) -> Grads:
    """
    A2C policy-gradient estimate for one trajectory (an ascent direction):

        Σ_t γ^t αᵀ((q̂_t - Ṽ(s_t, α)) / σ) ∇ log π(a_t | s_t, α)
    """
    _, scalar = vector_advantages(traj, q_hats, critic, popart.sigma, normalized)
    mb = Minibatch(
        traj.states,
        traj.actions,
        traj.alphas(),
        traj.log_probs,
        scalar,
        q_hats,
        gamma ** np.arange(len(traj)),
    )
    tape = Tape(params)
    logits = net.outputs(tape, tape.constant(mb.states), tape.constant(mb.alphas), critic=False)["logits"]
    return grads_of(params, tape, a2c_objective(logits, mb))
