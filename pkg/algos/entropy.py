from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

SCHEDULES = ("linear", "cosine", "custom", "fixed")


@dataclass(frozen=True)
class EntropyConfig:
    """
    Args:
        schedule: Target schedule, or ``fixed`` for a constant entropy bonus.
        h_min: Final target; None picks 0.1 on DST and 0.4 elsewhere.
        h_max: Initial target; None means log|A|.
        lambda_init: Initial Lagrange multiplier.
        damping: Damping coefficient c.
        eta_tilde: Multiplier step size; None means lr / 10.
        fixed_lambda: Bonus coefficient for ``fixed``.
    """

    schedule: str = "custom"
    h_min: Optional[float] = None
    h_max: Optional[float] = None
    lambda_init: float = 0.01
    damping: float = 0.01
    eta_tilde: Optional[float] = None
    fixed_lambda: float = 0.01

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def entropy_target(schedule: str, u: float, h_min: float, h_max: float) -> float:
    """Scheduled entropy target at training progress ``u`` (clamped into [0, 1])."""
    u = min(max(float(u), 0.0), 1.0)
    span = h_max - h_min
    if schedule == "linear":
        return h_max - span * u
    if schedule == "cosine":
        return span * math.cos(math.pi * u / 2.0) + h_min
    if schedule == "custom":
        # 前期平坦, 留出探索时间
        return span * (0.5 - math.cos(math.pi * (1.0 - u) ** 1.3) / 2.0) + h_min
    raise ValueError(f"Schedule '{schedule}' has no target, expected one of {SCHEDULES[:3]}")


@dataclass
class EntropyController:
    """
    Holds the entropy of the policy at a scheduled target with a damped
    Lagrange multiplier, or applies a constant bonus in ``fixed`` mode.
    """

    schedule: str
    h_min: float
    h_max: float
    lam: float = 0.01
    eta_tilde: float = 1e-4
    damping: float = 0.01
    fixed_lambda: float = 0.01

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"Unknown entropy schedule '{self.schedule}', expected one of {SCHEDULES}")
        if not 0.0 < self.h_min < self.h_max:
            raise ValueError(f"Need 0 < h_min < h_max, got h_min={self.h_min}, h_max={self.h_max}")

    @classmethod
    def from_config(cls, config: EntropyConfig, num_actions: int, lr: float, h_min: float) -> "EntropyController":
        h_max = config.h_max if config.h_max is not None else math.log(num_actions)
        return cls(
            schedule=config.schedule,
            h_min=h_min,
            h_max=h_max,
            lam=config.lambda_init,
            eta_tilde=config.eta_tilde if config.eta_tilde is not None else lr / 10.0,
            damping=config.damping,
            fixed_lambda=config.fixed_lambda,
        )

    @property
    def is_fixed(self) -> bool:
        return self.schedule == "fixed"

    @property
    def current_lambda(self) -> float:
        return self.fixed_lambda if self.is_fixed else self.lam

    def target(self, u: float) -> float:
        if self.is_fixed:
            return float("nan")
        return entropy_target(self.schedule, u, self.h_min, self.h_max)


def entropy_step(
    controller: EntropyController,
    h_hat: float,
    h_target: float,
    entropy_grads: Dict[str, np.ndarray],
) -> Tuple[Dict[str, np.ndarray], float]:
    """
    One multiplier step.

    g = (λ + c (H_target - Ĥ)) ∇Ĥ, then λ ← λ + η̃ (H_target - Ĥ). In ``fixed``
    mode g = λ_fixed ∇Ĥ and nothing is updated. ``g`` is an ascent direction.

    Returns:
        The entropy gradient term and the updated multiplier.
    """
    if controller.is_fixed:
        coefficient = controller.fixed_lambda
    else:
        gap = h_target - h_hat
        coefficient = controller.lam + controller.damping * gap
        controller.lam = controller.lam + controller.eta_tilde * gap
    g = {name: coefficient * grad for name, grad in entropy_grads.items()}
    return g, controller.current_lambda
