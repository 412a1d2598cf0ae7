from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class MetricsError(ValueError):
    """Raised for unsupported dimensions, missing references or malformed front files."""


@dataclass
class ParetoFront:
    """
    Nondominated objective points, optionally tagged with the weight that produced them.

    Args:
        points: (N, K) returns.
        alphas: (N, K) weights, row-aligned with ``points``; may be None.
        reference: Hypervolume reference point; may be None.
    """

    points: np.ndarray
    alphas: Optional[np.ndarray] = None
    reference: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def num_objectives(self) -> int:
        return self.points.shape[1]


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """
    True for points that no other point strictly dominates; among exact
    duplicates only the first is kept.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if np.any(np.all(points > points[i], axis=1)):
            keep[i] = False
            continue
        earlier = points[:i][keep[:i]]
        if len(earlier) and np.any(np.all(earlier == points[i], axis=1)):
            keep[i] = False
    return keep


def pareto_filter(points: Sequence[Sequence[float]], alphas: Optional[np.ndarray] = None) -> ParetoFront:
    """Keeps exactly the points that are not strictly dominated (``p ≻ q`` iff ``p_i > q_i`` for all i)."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise MetricsError("pareto_filter needs a nonempty (N, K) array of points")
    mask = nondominated_mask(points)
    tags = None if alphas is None else np.asarray(alphas, dtype=np.float64)[mask]
    return ParetoFront(points[mask], tags)
