from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque

import numpy as np


class DiscardAction(str, Enum):
    ACCEPT = "accept"
    DISCARD_STEP = "discard_step"
    RESET_TO_CHECKPOINT = "reset_to_checkpoint"


@dataclass
class DiscardState:
    """
    Statistics behind the step-discard heuristics.

    Args:
        warmup: Iterations during which no step is discarded.
        window: Length of the |ΔH| history and of the discard budget window.
        budget: Maximum discards within the last ``window`` iterations.
        collapse_steps: Consecutive near-zero entropy or actor-gradient
            iterations that trigger a checkpoint reset.
        collapse_eps: Threshold for "near zero".
        sigmas: Drop size, in standard deviations of recent |ΔH|.
    """

    warmup: int = 30
    window: int = 100
    budget: int = 5
    collapse_steps: int = 200
    collapse_eps: float = 1e-6
    sigmas: float = 3.0
    iteration: int = 0
    collapsed_for: int = 0
    history: Deque[float] = field(default_factory=deque)
    recent: Deque[bool] = field(default_factory=deque)

    def __post_init__(self):
        self.history = deque(self.history, maxlen=self.window)
        self.recent = deque(self.recent, maxlen=self.window)

    def discards_in_window(self) -> int:
        return int(sum(self.recent))

    def can_discard(self) -> bool:
        return self.iteration >= self.warmup and self.discards_in_window() < self.budget

    def record(self, action: DiscardAction) -> None:
        self.recent.append(action == DiscardAction.DISCARD_STEP)
        self.iteration += 1

    def force_discard(self) -> DiscardAction:
        """Routes a failed update (non-finite values) through the budget."""
        action = DiscardAction.DISCARD_STEP if self.discards_in_window() < self.budget else DiscardAction.RESET_TO_CHECKPOINT
        if action == DiscardAction.RESET_TO_CHECKPOINT:
            self.collapsed_for = 0
        self.record(action)
        return action

    def copy(self) -> "DiscardState":
        return DiscardState(
            self.warmup,
            self.window,
            self.budget,
            self.collapse_steps,
            self.collapse_eps,
            self.sigmas,
            self.iteration,
            self.collapsed_for,
            deque(self.history),
            deque(self.recent),
        )


def check_discard(
    state: DiscardState,
    entropy_now: float,
    entropy_prev: float,
    mean_reward_now: float,
    mean_reward_prev: float,
    actor_grad_norm: float,
) -> DiscardAction:
    """
    Decides whether the last optimizer step is kept.

    - reset_to_checkpoint once entropy or the actor gradient norm has been
      below ``collapse_eps`` for ``collapse_steps`` consecutive iterations;
    - discard_step when entropy dropped by more than mean + 3 std of recent
      |ΔH| while the mean reward did not increase, within the discard budget;
    - accept otherwise.
    """
    delta = entropy_now - entropy_prev
    if entropy_now < state.collapse_eps or actor_grad_norm < state.collapse_eps:
        state.collapsed_for += 1
    else:
        state.collapsed_for = 0

    if state.collapsed_for >= state.collapse_steps:
        state.collapsed_for = 0
        action = DiscardAction.RESET_TO_CHECKPOINT
    elif delta < 0 and mean_reward_now <= mean_reward_prev and state.can_discard() and len(state.history) >= 2:
        history = np.array(state.history)
        threshold = history.mean() + state.sigmas * history.std()
        action = DiscardAction.DISCARD_STEP if abs(delta) > threshold else DiscardAction.ACCEPT
    else:
        action = DiscardAction.ACCEPT

    if action == DiscardAction.ACCEPT:
        state.history.append(abs(delta))
    state.record(action)
    return action
