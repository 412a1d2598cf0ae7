from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np

from ndgrad.errors import NonFiniteError
from ndgrad.params import ParamTree


@dataclass
class AdamState:
    """
    Adam moments for a group of ParamTree entries.

    Args:
        names: Entries updated by this optimizer, in a fixed order.
        lr: Learning rate η.
        weight_decay: Decoupled decay rate, applied to critic-owned entries only.
    """

    names: List[str]
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.beta1 < 1.0 or not 0.0 < self.beta2 < 1.0:
            raise ValueError(f"Adam betas must lie in (0, 1), got {self.beta1}, {self.beta2}")
        if self.lr <= 0.0:
            raise ValueError(f"Adam learning rate must be positive, got {self.lr}")

    @classmethod
    def for_params(cls, params: ParamTree, names: Optional[Iterable[str]] = None, **kwargs) -> "AdamState":
        selected = params.names() if names is None else list(names)
        state = cls(names=selected, **kwargs)
        for name in selected:
            state.m[name] = np.zeros_like(params.value(name))
            state.v[name] = np.zeros_like(params.value(name))
        return state

    def copy(self) -> "AdamState":
        return AdamState(
            names=list(self.names),
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            weight_decay=self.weight_decay,
            step=self.step,
            m={k: v.copy() for k, v in self.m.items()},
            v={k: v.copy() for k, v in self.v.items()},
        )


def adam_step(params: ParamTree, state: AdamState) -> None:
    """
    Applies one Adam update with bias correction to ``state.names``.

    Gradients of the updated entries are zeroed and ``params.step_count`` is
    incremented. A non-finite gradient rejects the whole step before any
    value or moment is touched.
    """
    for name in state.names:
        if not np.all(np.isfinite(params.grad(name))):
            raise NonFiniteError(f"adam_step: non-finite gradient for '{name}'")

    state.step += 1
    bias1 = 1.0 - state.beta1**state.step
    bias2 = 1.0 - state.beta2**state.step
    for name in state.names:
        grad = params.grad(name)
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * grad
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * grad * grad
        state.m[name], state.v[name] = m, v
        value = params.value(name)
        update = state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
        if state.weight_decay and ParamTree.owner(name) == "critic":
            value = value - state.lr * state.weight_decay * value
        params.set_value(name, value - update)

    params.zero_grad(state.names)
    params.step_count += 1


def clip_global_norm(
    params: ParamTree, max_norm: float, names: Optional[Iterable[str]] = None
) -> float:
    """
    Rescales gradients so that their global L2 norm is at most ``max_norm``.

    Returns:
        The global norm before clipping.
    """
    if max_norm <= 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    selected = params.names() if names is None else list(names)
    norm = params.global_grad_norm(selected)
    if norm > max_norm:
        scale = max_norm / norm
        params.set_grads({name: params.grad(name) * scale for name in selected})
    return norm
