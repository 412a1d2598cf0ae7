"""
Deep Sea Treasure.

A submarine starts in the top-left cell of an 11 x 10 grid and moves up, down,
left or right. Each column holds one treasure on a staircase sea floor; the
cells below a treasure are rock and behave like walls. Every step costs one
unit of fuel, and reaching a treasure ends the episode with its value.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from envs.base import DstMapError, EnvSpec, MOEnv, StepResult
from utils.logger import logger

# 动作: 0=上 1=下 2=左 3=右
ACTION_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))

STAIRCASE_CELLS = (
    (1, 0), (2, 1), (3, 2), (4, 3), (4, 4),
    (4, 5), (7, 6), (7, 7), (9, 8), (10, 9),
)

DST_MAPS: Dict[str, Tuple[float, ...]] = {
    # 所有宝藏在 γ=1 时都位于凸前沿上
    "convex": (1.0, 8.0, 14.0, 19.0, 21.0, 22.6, 27.6, 28.6, 31.0, 32.2),
    # 经典取值, 前沿非凸
    "classic": (0.7, 8.2, 11.5, 14.0, 15.1, 16.1, 19.6, 20.3, 22.4, 23.7),
}


@dataclass(frozen=True)
class DstMap:
    rows: int = 11
    cols: int = 10
    treasures: Tuple[Tuple[int, int, float], ...] = field(
        default_factory=lambda: tuple((r, c, v) for (r, c), v in zip(STAIRCASE_CELLS, DST_MAPS["convex"]))
    )
    start: Tuple[int, int] = (0, 0)
    fuel_cost: float = -1.0
    require_convex: bool = True

    @classmethod
    def named(cls, name: str) -> "DstMap":
        if name not in DST_MAPS:
            raise DstMapError(f"Unknown DST map '{name}', expected one of {sorted(DST_MAPS)}")
        values = DST_MAPS[name]
        return cls(
            treasures=tuple((r, c, v) for (r, c), v in zip(STAIRCASE_CELLS, values)),
            require_convex=name == "convex",
        )

    @classmethod
    def from_cells(cls, cells: Sequence[Sequence[float]], require_convex: bool = True) -> "DstMap":
        treasures = []
        for cell in cells:
            if len(cell) != 3:
                raise DstMapError(f"Treasure entry {list(cell)} must be [row, col, value]")
            treasures.append((int(cell[0]), int(cell[1]), float(cell[2])))
        return cls(treasures=tuple(treasures), require_convex=require_convex)

    def rock_cells(self) -> set:
        rocks = set()
        for row, col, _ in self.treasures:
            rocks.update((r, col) for r in range(row + 1, self.rows))
        return rocks


def _shortest_paths(dst_map: DstMap) -> Dict[Tuple[int, int], int]:
    """BFS step counts from the start to every treasure; treasure cells are absorbing."""
    rocks = dst_map.rock_cells()
    treasure_cells = {(r, c) for r, c, _ in dst_map.treasures}
    distances = {dst_map.start: 0}
    queue = deque([dst_map.start])
    found: Dict[Tuple[int, int], int] = {}
    while queue:
        cell = queue.popleft()
        if cell in treasure_cells:
            found[cell] = distances[cell]
            continue
        for dr, dc in ACTION_DELTAS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if not (0 <= nxt[0] < dst_map.rows and 0 <= nxt[1] < dst_map.cols):
                continue
            if nxt in rocks or nxt in distances:
                continue
            distances[nxt] = distances[cell] + 1
            queue.append(nxt)
    return found


def front_points(dst_map: DstMap, gamma: float) -> np.ndarray:
    """
    Exact Pareto front of a map: one point per reachable treasure.

    Point for treasure value t at shortest distance d is
    ``(t * gamma**(d-1), -sum_{j<d} gamma**j)``. Rows are sorted by distance.
    """
    distances = _shortest_paths(dst_map)
    points = []
    for row, col, value in sorted(dst_map.treasures, key=lambda t: distances.get((t[0], t[1]), 0)):
        d = distances.get((row, col))
        if d is None:
            continue
        fuel = dst_map.fuel_cost * float(np.sum(gamma ** np.arange(d)))
        points.append((value * gamma ** (d - 1), fuel))
    return np.array(points, dtype=np.float64).reshape(-1, 2)


def validate_map(dst_map: DstMap) -> None:
    """
    Checks cell layout, reachability and value ordering; with ``require_convex``
    also checks that every treasure is the unique linear-scalarization optimum
    for some weight at gamma = 1.
    """
    cells = [(r, c) for r, c, _ in dst_map.treasures]
    if not cells:
        raise DstMapError("DST map has no treasures")
    if len(set(cells)) != len(cells):
        raise DstMapError("DST treasure cells must be distinct")
    for r, c in cells:
        if not (0 <= r < dst_map.rows and 0 <= c < dst_map.cols):
            raise DstMapError(f"Treasure cell {(r, c)} is outside the {dst_map.rows}x{dst_map.cols} grid")
        if (r, c) == dst_map.start:
            raise DstMapError("A treasure cannot sit on the start cell")
    distances = _shortest_paths(dst_map)
    unreachable = [cell for cell in cells if cell not in distances]
    if unreachable:
        raise DstMapError(f"Treasure cells {unreachable} cannot be reached from {dst_map.start}")

    ordered = sorted(dst_map.treasures, key=lambda t: distances[(t[0], t[1])])
    for (r0, c0, v0), (r1, c1, v1) in zip(ordered, ordered[1:]):
        if distances[(r1, c1)] <= distances[(r0, c0)] or v1 <= v0:
            raise DstMapError(
                f"Farther treasures need strictly larger values: {(r0, c0, v0)} vs {(r1, c1, v1)}"
            )

    if dst_map.require_convex:
        points = front_points(dst_map, 1.0)
        slopes = np.diff(points[:, 0]) / -np.diff(points[:, 1])
        if np.any(np.diff(slopes) >= 0):
            raise DstMapError("DST front is not convex: some treasure is never a linear-scalarization optimum")


class DeepSeaTreasure(MOEnv):
    """
    Args:
        dst_map: Treasure layout; validated on construction.
        max_episode_steps: Truncation horizon.
    """

    env_id = "dst"

    def __init__(self, dst_map: Optional[DstMap] = None, max_episode_steps: int = 200):
        self.dst_map = dst_map if dst_map is not None else DstMap()
        validate_map(self.dst_map)
        self._spec = EnvSpec(
            state_dim=self.dst_map.rows * self.dst_map.cols,
            num_actions=4,
            num_objectives=2,
            max_episode_steps=max_episode_steps,
        )
        self._rocks = self.dst_map.rock_cells()
        self._treasures = {(r, c): v for r, c, v in self.dst_map.treasures}
        self.position = self.dst_map.start
        logger.debug(f"DST map loaded with {len(self._treasures)} treasures")

    @property
    def spec(self) -> EnvSpec:
        return self._spec

    def _observe(self) -> np.ndarray:
        state = np.zeros(self._spec.state_dim)
        state[self.position[0] * self.dst_map.cols + self.position[1]] = 1.0
        return state

    def reset(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        self.position = self.dst_map.start
        return self._observe()

    def step(self, action: int) -> StepResult:
        action = self._check_action(action)
        dr, dc = ACTION_DELTAS[action]
        row, col = self.position[0] + dr, self.position[1] + dc
        if 0 <= row < self.dst_map.rows and 0 <= col < self.dst_map.cols and (row, col) not in self._rocks:
            self.position = (row, col)
        treasure = self._treasures.get(self.position)
        reward = np.array([treasure if treasure is not None else 0.0, self.dst_map.fuel_cost])
        return self._observe(), reward, treasure is not None

    def spawn(self) -> "DeepSeaTreasure":
        return DeepSeaTreasure(self.dst_map, self._spec.max_episode_steps)

    def true_pareto_front(self, gamma: float) -> np.ndarray:
        return front_points(self.dst_map, gamma)

    def reference_point(self, gamma: float) -> np.ndarray:
        horizon = self._spec.max_episode_steps
        worst_fuel = self.dst_map.fuel_cost * float(np.sum(gamma ** np.arange(horizon)))
        return np.array([0.0, worst_fuel])

    def treasure_cells(self) -> List[Tuple[int, int, float]]:
        return list(self.dst_map.treasures)
