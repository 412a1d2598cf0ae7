from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


class EnvError(Exception):
    """Base class for environment errors."""


class InvalidActionError(EnvError, ValueError):
    def __init__(self, action, num_actions: int):
        self.action = action
        self.num_actions = num_actions
        super().__init__(f"Action {action!r} is out of range [0, {num_actions})")


class UnsupportedEnvError(EnvError):
    """Raised for unknown environment ids or operations an environment does not support."""


class DstMapError(EnvError, ValueError):
    """Raised when a Deep Sea Treasure map is malformed or its front is not convex."""


@dataclass(frozen=True)
class EnvSpec:
    state_dim: int
    num_actions: int
    num_objectives: int
    max_episode_steps: int

    def __post_init__(self):
        for name in ("state_dim", "num_actions", "num_objectives", "max_episode_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"EnvSpec.{name} must be positive, got {getattr(self, name)}")


StepResult = Tuple[np.ndarray, np.ndarray, bool]


class MOEnv(ABC):
    """
    Multi-objective environment with a discrete action space.

    ``step`` returns ``(next_state, reward, terminal)`` where ``reward`` is a
    K-vector. Truncation at ``spec.max_episode_steps`` is handled by the caller.
    """

    env_id: str = ""

    @property
    @abstractmethod
    def spec(self) -> EnvSpec: ...

    @abstractmethod
    def reset(self, rng: Optional[np.random.Generator] = None) -> np.ndarray: ...

    @abstractmethod
    def step(self, action: int) -> StepResult: ...

    @abstractmethod
    def spawn(self) -> "MOEnv":
        """Returns a fresh instance with the same configuration."""

    @abstractmethod
    def reference_point(self, gamma: float) -> np.ndarray:
        """Hypervolume reference point for returns discounted with ``gamma``."""

    def true_pareto_front(self, gamma: float) -> np.ndarray:
        raise UnsupportedEnvError(f"No exact Pareto front is available for '{self.env_id}'")

    def _check_action(self, action) -> int:
        if isinstance(action, (bool, np.bool_)) or not isinstance(action, (int, np.integer)):
            raise InvalidActionError(action, self.spec.num_actions)
        if not 0 <= int(action) < self.spec.num_actions:
            raise InvalidActionError(action, self.spec.num_actions)
        return int(action)
