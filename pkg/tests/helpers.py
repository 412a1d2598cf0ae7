"""Finite-difference helpers and a toy environment shared by the tests."""
from typing import Optional

import numpy as np

from envs.base import EnvSpec, MOEnv, StepResult
from ndgrad.params import ParamTree
from ndgrad.tensor import Tape

H = 1e-5
TOLERANCE = 1e-4


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.linalg.norm(analytic - numeric)
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    return float(diff / max(scale, 1e-8))


def numeric_grads(params: ParamTree, loss_fn, h: float = H):
    """Central differences of ``loss_fn(Tape(params))`` w.r.t. every entry."""
    grads = {}
    for name in params:
        base = params.value(name).copy()
        grad = np.zeros_like(base)
        for index in np.ndindex(base.shape):
            shifted = base.copy()
            shifted[index] = base[index] + h
            params.set_value(name, shifted)
            up = float(loss_fn(Tape(params)).data)
            shifted[index] = base[index] - h
            params.set_value(name, shifted)
            down = float(loss_fn(Tape(params)).data)
            grad[index] = (up - down) / (2 * h)
        params.set_value(name, base)
        grads[name] = grad
    return grads


def analytic_grads(params: ParamTree, loss_fn):
    tape = Tape(params)
    out = loss_fn(tape)
    params.zero_grad()
    tape.backward(out)
    grads = params.grads()
    params.zero_grad()
    return grads


def assert_grads_match(params: ParamTree, loss_fn, tolerance: float = TOLERANCE):
    analytic = analytic_grads(params, loss_fn)
    numeric = numeric_grads(params, loss_fn)
    for name in params:
        error = relative_error(analytic[name], numeric[name])
        assert error < tolerance, f"{name}: relative error {error:.2e}"


def tree(rng: np.random.Generator, **shapes) -> ParamTree:
    """ParamTree with ``actor.<key>`` entries drawn uniformly from [-2, 2]."""
    params = ParamTree()
    for key, shape in shapes.items():
        params.add(f"actor.{key}", rng.uniform(-2.0, 2.0, size=shape))
    return params


class FlatBandit(MOEnv):
    """
    Stateless bandit whose arms all pay the same reward vector, so every
    policy is optimal and only the entropy constraint shapes the policy.
    """

    env_id = "bandit"

    def __init__(self, num_actions: int = 4, reward=(0.0, 0.0)):
        self.reward = np.asarray(reward, dtype=np.float64)
        self._spec = EnvSpec(state_dim=1, num_actions=num_actions, num_objectives=len(self.reward), max_episode_steps=1)

    @property
    def spec(self) -> EnvSpec:
        return self._spec

    def reset(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        return np.ones(1)

    def step(self, action: int) -> StepResult:
        self._check_action(action)
        return np.ones(1), self.reward.copy(), True

    def spawn(self) -> "FlatBandit":
        return FlatBandit(self._spec.num_actions, self.reward)

    def reference_point(self, gamma: float) -> np.ndarray:
        return self.reward - 1.0
