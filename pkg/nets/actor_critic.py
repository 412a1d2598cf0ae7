"""
Weight-conditioned actor-critic networks.

Parameter names encode ownership (see ``ndgrad.params``):

    shared trunk        shared.trunk.*              (+ shared.hyper.l0.* for hypernets)
    non-shared trunk    actor.trunk.* / critic.trunk.*
                        (+ actor.hyper.l0.* / critic.hyper.l0.*)
    heads               actor.head.* / critic.head.*         multi-body, merge
                        actor.hyper.out.* / critic.hyper.out.*  hypernets

Weights are stored as (out, in). A hypernetwork output row vector is laid out
as the N*F head weights in row-major order followed by the N head biases.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from envs.base import EnvSpec
from momdp.popart import PopArtStats
from ndgrad import tensor as T
from ndgrad.params import ParamTree
from ndgrad.tensor import Tape, Tensor
from nets.config import ArchConfig, ArchError

SIMPLEX_TOL = 1e-6
HYPER_OUT_SCALE = 0.01


@dataclass
class ActorCriticOutput:
    action_probs: np.ndarray
    normalized_value: np.ndarray
    unnormalized_value: np.ndarray


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


class ActorCriticNet:
    """
    Builds parameters for one architecture and records its forward pass on a tape.

    Args:
        arch: Architecture choice.
        spec: Environment dimensions (state size, actions, objectives).
    """

    def __init__(self, arch: ArchConfig, spec: EnvSpec):
        self.arch = arch
        self.spec = spec

    # ------------------------------------------------------------------
    # naming
    # ------------------------------------------------------------------

    def trunk_prefix(self, side: str) -> str:
        return "shared.trunk" if self.arch.shared_trunk else f"{side}.trunk"

    def hyper_prefix(self, side: str) -> str:
        return "shared.hyper.l0" if self.arch.shared_trunk else f"{side}.hyper.l0"

    def head_size(self, side: str) -> int:
        return self.spec.num_actions if side == "actor" else self.spec.num_objectives

    # ------------------------------------------------------------------
    # build
    # ------------------------------------------------------------------

    def build(self, rng: np.random.Generator) -> ParamTree:
        """Initializes a ParamTree whose names and shapes depend only on (arch, spec)."""
        params = ParamTree()
        hidden, features = self.arch.hidden_dim, self.arch.feature_dim
        d_s, k = self.spec.state_dim, self.spec.num_objectives

        def dense(name: str, fan_out: int, fan_in: int, scale: float = 1.0) -> None:
            params.add(f"{name}.w", scale * _glorot(rng, fan_out, fan_in))
            params.add(f"{name}.b", np.zeros(fan_out))

        trunk_sides = ("actor",) if self.arch.shared_trunk else ("actor", "critic")
        for side in trunk_sides:
            prefix = self.trunk_prefix(side)
            if self.arch.kind == "multi_body":
                for i in range(k):
                    dense(f"{prefix}.body{i}", hidden, d_s)
                mlp_in = hidden
            elif self.arch.kind == "merge":
                dense(f"{prefix}.state_embed", hidden, d_s)
                dense(f"{prefix}.weight_embed", hidden, k)
                mlp_in = hidden
            else:
                mlp_in = d_s
            widths = [mlp_in] + [hidden] * (self.arch.mlp_depth - 1) + [features]
            for j in range(self.arch.mlp_depth):
                dense(f"{prefix}.mlp{j}", widths[j + 1], widths[j])
            if self.arch.is_hypernet:
                hyper_in = k + d_s if self.arch.kind == "hypernet_obs" else k
                dense(self.hyper_prefix(side), hidden, hyper_in)

        for side in ("actor", "critic"):
            n = self.head_size(side)
            if self.arch.is_hypernet:
                dense(f"{side}.hyper.out", n * features + n, hidden, scale=HYPER_OUT_SCALE)
            else:
                dense(f"{side}.head", n, features)
        return params

    # ------------------------------------------------------------------
    # forward on a tape
    # ------------------------------------------------------------------

    def _dense(self, tape: Tape, name: str, x: Tensor) -> Tensor:
        return T.linear(x, tape.param(f"{name}.w"), tape.param(f"{name}.b"))

    def features(self, tape: Tape, states: Tensor, alphas: Tensor, side: str) -> Tensor:
        """Trunk output f of shape (B, F) for ``side`` ("actor" or "critic")."""
        prefix = self.trunk_prefix(side)
        if self.arch.kind == "multi_body":
            bodies = [
                T.relu(self._dense(tape, f"{prefix}.body{i}", states))
                for i in range(self.spec.num_objectives)
            ]
            x = T.weighted_sum(alphas, bodies)
        elif self.arch.kind == "merge":
            x = T.mul(
                T.sigmoid(self._dense(tape, f"{prefix}.state_embed", states)),
                T.sigmoid(self._dense(tape, f"{prefix}.weight_embed", alphas)),
            )
        else:
            x = states
        for j in range(self.arch.mlp_depth):
            x = T.relu(self._dense(tape, f"{prefix}.mlp{j}", x))
        return x

    def hyper_hidden(self, tape: Tape, states: Tensor, alphas: Tensor, side: str) -> Tensor:
        x = T.concat([alphas, states], axis=-1) if self.arch.kind == "hypernet_obs" else alphas
        return T.relu(self._dense(tape, self.hyper_prefix(side), x))

    def _head(self, tape: Tape, features: Tensor, hyper: Optional[Tensor], side: str) -> Tensor:
        if not self.arch.is_hypernet:
            return self._dense(tape, f"{side}.head", features)
        n, f = self.head_size(side), self.arch.feature_dim
        generated = self._dense(tape, f"{side}.hyper.out", hyper)
        batch = features.shape[0]
        weights = T.reshape(T.slice_last(generated, 0, n * f), (batch, n, f))
        biases = T.slice_last(generated, n * f, n * f + n)
        return T.add(T.bmv(weights, features), biases)

    def outputs(
        self,
        tape: Tape,
        states: Tensor,
        alphas: Tensor,
        actor: bool = True,
        critic: bool = True,
    ) -> Dict[str, Tensor]:
        """
        Records the requested heads on ``tape``.

        Returns:
            Dict with ``logits`` (B, |A|) and/or ``values`` (B, K), the latter
            in normalized units. Shared trunks are evaluated once.
        """
        cache: Dict[str, Tuple[Tensor, Optional[Tensor]]] = {}

        def trunk(side: str):
            key = "shared" if self.arch.shared_trunk else side
            if key not in cache:
                hyper = self.hyper_hidden(tape, states, alphas, side) if self.arch.is_hypernet else None
                cache[key] = (self.features(tape, states, alphas, side), hyper)
            return cache[key]

        out: Dict[str, Tensor] = {}
        if actor:
            out["logits"] = self._head(tape, *trunk("actor"), "actor")
        if critic:
            out["values"] = self._head(tape, *trunk("critic"), "critic")
        return out

    def check_inputs(self, states: np.ndarray, alphas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        alphas = np.atleast_2d(np.asarray(alphas, dtype=np.float64))
        if states.shape[1] != self.spec.state_dim:
            raise ArchError(f"State dim {states.shape[1]} does not match spec {self.spec.state_dim}")
        if alphas.shape[1] != self.spec.num_objectives:
            raise ArchError(f"Weight dim {alphas.shape[1]} does not match K={self.spec.num_objectives}")
        if alphas.shape[0] != states.shape[0]:
            raise ArchError(f"Got {states.shape[0]} states but {alphas.shape[0]} weights")
        if np.any(alphas < -SIMPLEX_TOL) or np.any(np.abs(alphas.sum(axis=1) - 1.0) > SIMPLEX_TOL):
            raise ArchError("Weights must lie on the simplex")
        return states, alphas

    def forward(
        self,
        params: ParamTree,
        states: np.ndarray,
        alphas: np.ndarray,
        popart: Optional[PopArtStats] = None,
    ) -> ActorCriticOutput:
        """Numeric forward pass for a batch; unnormalized values use ``popart`` when given."""
        states, alphas = self.check_inputs(states, alphas)
        tape = Tape(params)
        out = self.outputs(tape, tape.constant(states), tape.constant(alphas))
        probs = T.softmax(out["logits"]).data
        normalized = out["values"].data
        unnormalized = popart.unnormalize(normalized) if popart is not None else normalized.copy()
        return ActorCriticOutput(probs, normalized, unnormalized)

    # ------------------------------------------------------------------
    # PopArt
    # ------------------------------------------------------------------

    def critic_head(self, params: ParamTree) -> "CriticHeadParams":
        return CriticHeadParams(params, self)


class CriticHeadParams:
    """
    The parameters that produce the critic's normalized output, seen as a
    rescalable affine head. For hypernets these are the rows of the critic
    hypernetwork output layer that generate (W_c, b_c).
    """

    def __init__(self, params: ParamTree, net: ActorCriticNet):
        self.params = params
        self.net = net

    def rescale(self, scale: np.ndarray, shift: np.ndarray) -> None:
        k = self.net.spec.num_objectives
        if self.net.arch.is_hypernet:
            f = self.net.arch.feature_dim
            row_scale = np.concatenate([np.repeat(scale, f), scale])
            row_shift = np.concatenate([np.zeros(k * f), shift])
            w_name, b_name = "critic.hyper.out.w", "critic.hyper.out.b"
        else:
            row_scale, row_shift = scale, shift
            w_name, b_name = "critic.head.w", "critic.head.b"
        self.params.set_value(w_name, self.params.value(w_name) * row_scale[:, None])
        self.params.set_value(b_name, self.params.value(b_name) * row_scale + row_shift)


class ActorCriticPolicy:
    """Numeric view of a trained network, usable as rollout policy and critic."""

    def __init__(self, net: ActorCriticNet, params: ParamTree, popart: Optional[PopArtStats] = None):
        self.net = net
        self.params = params
        self.popart = popart

    def action_probs(self, states: np.ndarray, alphas: np.ndarray) -> np.ndarray:
        states, alphas = self.net.check_inputs(states, alphas)
        tape = Tape(self.params)
        out = self.net.outputs(tape, tape.constant(states), tape.constant(alphas), critic=False)
        return T.softmax(out["logits"]).data

    def values(self, states: np.ndarray, alphas: np.ndarray) -> np.ndarray:
        states, alphas = self.net.check_inputs(states, alphas)
        tape = Tape(self.params)
        out = self.net.outputs(tape, tape.constant(states), tape.constant(alphas), actor=False)
        normalized = out["values"].data
        return self.popart.unnormalize(normalized) if self.popart is not None else normalized
