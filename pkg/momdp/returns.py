from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from momdp.rollout import Critic, Trajectory


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")


def discounted_return(rewards: Sequence[Sequence[float]], gamma: float) -> np.ndarray:
    """Σ_t γ^t r_t for one finished episode."""
    _check_gamma(gamma)
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.size == 0:
        return np.zeros(rewards.shape[-1] if rewards.ndim == 2 else 0)
    return (gamma ** np.arange(len(rewards))) @ rewards


def reward_to_go(traj: Trajectory, gamma: float, critic: Optional[Critic] = None) -> np.ndarray:
    """
    Bootstrapped TD(1) targets q̂_t for every step of ``traj``.

    Truncated trajectories start the backward recursion from the critic's
    unnormalized prediction at the bootstrap state; terminal ones from zero.

    Returns:
        (T, K) array satisfying q̂_t = r_t + γ q̂_{t+1}.
    """
    _check_gamma(gamma)
    tail = np.zeros(traj.rewards.shape[1])
    if traj.truncated and traj.bootstrap_state is not None:
        if critic is None:
            raise ValueError("A critic is required to bootstrap a truncated trajectory")
        tail = critic.values(traj.bootstrap_state[None, :], traj.alpha[None, :])[0]
    q_hats = np.empty_like(traj.rewards)
    running = tail
    for t in range(len(traj) - 1, -1, -1):
        running = traj.rewards[t] + gamma * running
        q_hats[t] = running
    return q_hats


def advantages(
    traj: Trajectory,
    q_hats: np.ndarray,
    critic: Critic,
    sigma: np.ndarray,
    normalized: bool = True,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vector and scalarized advantages.

    Â_t = q̂_t - Ṽ(s_t, α) with the unnormalized critic; the scalar advantage is
    αᵀ(Â_t / σ), or αᵀÂ_t when ``normalized`` is off.
    """
    values = critic.values(traj.states, traj.alphas())
    return scalarize_advantages(traj.alpha, q_hats, values, sigma, normalized)


def scalarize_advantages(
    alpha: np.ndarray,
    q_hats: np.ndarray,
    values: np.ndarray,
    sigma: np.ndarray,
    normalized: bool = True,
) -> Tuple[np.ndarray, np.ndarray]:
    vector = q_hats - values
    scaled = vector / sigma if normalized else vector
    return vector, scaled @ alpha
