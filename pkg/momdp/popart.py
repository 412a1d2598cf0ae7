from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

SIGMA_MIN = 1e-4


class CriticHead(Protocol):
    def rescale(self, scale: np.ndarray, shift: np.ndarray) -> None:
        """Maps each normalized output y_k to scale_k * y_k + shift_k."""


@dataclass
class PopArtStats:
    """
    Per-objective running statistics of the critic targets.

    ``mu`` and ``second_moment`` are exponential moving averages with rate
    ``step_size``. When ``enabled`` is off the statistics stay at (0, 1).
    """

    mu: np.ndarray
    second_moment: np.ndarray
    step_size: float = 0.001
    sigma_min: float = SIGMA_MIN
    enabled: bool = True

    @classmethod
    def initial(cls, num_objectives: int, step_size: float = 0.001, enabled: bool = True) -> "PopArtStats":
        return cls(np.zeros(num_objectives), np.ones(num_objectives), step_size, SIGMA_MIN, enabled)

    @property
    def sigma(self) -> np.ndarray:
        variance = np.maximum(self.second_moment - self.mu**2, self.sigma_min**2)
        return np.sqrt(variance)

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mu) / self.sigma

    def unnormalize(self, normalized: np.ndarray) -> np.ndarray:
        return self.sigma * normalized + self.mu

    def copy(self) -> "PopArtStats":
        return PopArtStats(self.mu.copy(), self.second_moment.copy(), self.step_size, self.sigma_min, self.enabled)

    def as_array(self) -> np.ndarray:
        return np.stack([self.mu, self.second_moment])


def popart_update(popart: PopArtStats, head: CriticHead, targets: np.ndarray) -> None:
    """
    Moves (μ, ν) towards the batch moments of ``targets`` and rescales the
    critic head so that unnormalized predictions are unchanged.
    """
    targets = np.asarray(targets, dtype=np.float64).reshape(-1, len(popart.mu))
    if len(targets) == 0:
        raise ValueError("popart_update needs at least one target")
    if not popart.enabled or popart.step_size == 0.0:
        return
    old_mu, old_sigma = popart.mu.copy(), popart.sigma
    beta = popart.step_size
    popart.mu = (1.0 - beta) * popart.mu + beta * targets.mean(axis=0)
    popart.second_moment = (1.0 - beta) * popart.second_moment + beta * (targets**2).mean(axis=0)
    new_sigma = popart.sigma
    head.rescale(old_sigma / new_sigma, (old_mu - popart.mu) / new_sigma)
