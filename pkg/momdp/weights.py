from typing import Sequence

import numpy as np

SIMPLEX_TOL = 1e-9


class WeightError(ValueError):
    """Raised for weights off the simplex or with the wrong dimension."""


def sample_weight(rng: np.random.Generator, num_objectives: int) -> np.ndarray:
    """
    Draws α uniformly from the (K-1)-simplex.

    Uses the spacings of K-1 sorted uniforms on [0, 1], which are jointly
    Dirichlet(1, ..., 1).
    """
    if num_objectives < 2:
        raise WeightError(f"Need at least 2 objectives, got {num_objectives}")
    cuts = np.sort(rng.random(num_objectives - 1))
    alpha = np.diff(np.concatenate(([0.0], cuts, [1.0])))
    return alpha


def check_weight(alpha: Sequence[float], num_objectives: int, tol: float = SIMPLEX_TOL) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (num_objectives,):
        raise WeightError(f"Weight has shape {alpha.shape}, expected ({num_objectives},)")
    if np.any(alpha < -tol) or abs(alpha.sum() - 1.0) > tol:
        raise WeightError(f"Weight {alpha.tolist()} is not on the simplex")
    return alpha


def scalarize(alpha: Sequence[float], value: Sequence[float]) -> float:
    """Returns αᵀv."""
    alpha = np.asarray(alpha, dtype=np.float64)
    value = np.asarray(value, dtype=np.float64)
    if alpha.shape != value.shape[-1:]:
        raise WeightError(f"Weight of shape {alpha.shape} cannot scalarize a vector of shape {value.shape}")
    return float(alpha @ value)


def weight_grid(num_points: int) -> np.ndarray:
    """K=2 evaluation grid: ``num_points`` equally spaced α, from (0, 1) to (1, 0)."""
    if num_points < 1:
        raise WeightError(f"Grid size must be positive, got {num_points}")
    if num_points == 1:
        return np.array([[0.5, 0.5]])
    first = np.linspace(0.0, 1.0, num_points)
    return np.stack([first, 1.0 - first], axis=1)


def simplex_samples(rng: np.random.Generator, num_objectives: int, count: int) -> np.ndarray:
    if count < 1:
        raise WeightError(f"Sample count must be positive, got {count}")
    return np.stack([sample_weight(rng, num_objectives) for _ in range(count)])
