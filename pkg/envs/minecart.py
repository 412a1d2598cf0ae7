"""
Minecart.

A cart leaves the base in the corner of the unit square, drives to mines,
collects two kinds of ore up to its capacity and returns to the base. The
reward has three components: ore of type 1 and ore of type 2, both paid on
delivery and scaled by the capacity, and fuel, negative on every step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from envs.base import EnvError, EnvSpec, MOEnv, StepResult

MINE, ACCELERATE, BRAKE, TURN_LEFT, TURN_RIGHT, NONE = range(6)


@dataclass(frozen=True)
class MineSpec:
    x: float
    y: float
    ore_mean: Tuple[float, float]
    ore_std: Tuple[float, float] = (0.0, 0.0)


def _default_mines() -> Tuple[MineSpec, ...]:
    return (
        MineSpec(0.20, 0.75, (0.25, 0.05), (0.05, 0.02)),
        MineSpec(0.45, 0.50, (0.15, 0.15), (0.04, 0.04)),
        MineSpec(0.75, 0.20, (0.05, 0.25), (0.02, 0.05)),
        MineSpec(0.70, 0.85, (0.30, 0.20), (0.06, 0.05)),
        MineSpec(0.90, 0.60, (0.20, 0.30), (0.05, 0.06)),
    )


@dataclass(frozen=True)
class MinecartConfig:
    mines: Tuple[MineSpec, ...] = field(default_factory=_default_mines)
    capacity: float = 1.5
    acceleration: float = 0.0075
    max_speed: float = 0.05
    friction: float = 0.02
    rotation_deg: float = 10.0
    mine_radius: float = 0.08
    base_radius: float = 0.15
    fuel_idle: float = 0.005
    fuel_accelerate: float = 0.025
    fuel_mine: float = 0.05
    max_episode_steps: int = 1000
    deterministic: bool = False

    def __post_init__(self):
        if self.capacity <= 0:
            raise EnvError(f"Minecart capacity must be positive, got {self.capacity}")
        if not self.mines:
            raise EnvError("Minecart needs at least one mine")
        for mine in self.mines:
            if not (0.0 <= mine.x <= 1.0 and 0.0 <= mine.y <= 1.0):
                raise EnvError(f"Mine position {(mine.x, mine.y)} is outside the unit square")
            if min(mine.ore_mean) < 0 or min(mine.ore_std) < 0:
                raise EnvError("Mine ore parameters must be non-negative")


class Minecart(MOEnv):
    """
    Args:
        config: Dynamics and mine layout. With ``deterministic`` every mining
            action yields exactly the mine's mean ore; otherwise the yield is
            drawn from the environment's own generator passed to ``reset``.
    """

    def __init__(self, config: Optional[MinecartConfig] = None):
        self.config = config if config is not None else MinecartConfig()
        self.env_id = "minecart-deterministic" if self.config.deterministic else "minecart"
        self._spec = EnvSpec(
            state_dim=7,
            num_actions=6,
            num_objectives=3,
            max_episode_steps=self.config.max_episode_steps,
        )
        self._rng = np.random.default_rng(0)
        self._reset_state()

    @property
    def spec(self) -> EnvSpec:
        return self._spec

    def _reset_state(self) -> None:
        self.position = np.zeros(2)
        self.speed = 0.0
        self.angle = math.radians(45.0)
        self.cargo = np.zeros(2)
        self.fuel_spent = 0.0

    def _observe(self) -> np.ndarray:
        return np.array(
            [
                self.position[0],
                self.position[1],
                self.speed / self.config.max_speed,
                math.sin(self.angle),
                math.cos(self.angle),
                self.cargo[0] / self.config.capacity,
                self.cargo[1] / self.config.capacity,
            ]
        )

    def reset(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        if rng is not None:
            self._rng = rng
        self._reset_state()
        return self._observe()

    def in_base(self) -> bool:
        return float(np.hypot(*self.position)) <= self.config.base_radius

    def mine_at_position(self) -> Optional[MineSpec]:
        for mine in self.config.mines:
            if math.hypot(self.position[0] - mine.x, self.position[1] - mine.y) <= self.config.mine_radius:
                return mine
        return None

    def _extract(self, mine: MineSpec) -> None:
        mean = np.array(mine.ore_mean)
        if self.config.deterministic:
            ore = mean
        else:
            ore = np.maximum(mean + np.array(mine.ore_std) * self._rng.standard_normal(2), 0.0)
        room = self.config.capacity - float(self.cargo.sum())
        total = float(ore.sum())
        if total > room:
            # 超出容量时按比例截断
            ore = ore * (room / total) if total > 0 else ore
        self.cargo = self.cargo + ore

    def step(self, action: int) -> StepResult:
        action = self._check_action(action)
        cfg = self.config
        fuel = cfg.fuel_idle
        if action == MINE:
            fuel += cfg.fuel_mine
            self.speed = 0.0
            mine = self.mine_at_position()
            if mine is not None:
                self._extract(mine)
        else:
            if action == ACCELERATE:
                fuel += cfg.fuel_accelerate
                self.speed = min(self.speed + cfg.acceleration, cfg.max_speed)
            elif action == BRAKE:
                self.speed = max(self.speed - cfg.acceleration, 0.0)
            elif action == TURN_LEFT:
                self.angle = (self.angle + math.radians(cfg.rotation_deg)) % (2 * math.pi)
            elif action == TURN_RIGHT:
                self.angle = (self.angle - math.radians(cfg.rotation_deg)) % (2 * math.pi)
            self.speed *= 1.0 - cfg.friction
            moved = self.position + self.speed * np.array([math.cos(self.angle), math.sin(self.angle)])
            clipped = np.clip(moved, 0.0, 1.0)
            if not np.array_equal(moved, clipped):
                self.speed = 0.0
            self.position = clipped

        self.fuel_spent += fuel
        reward = np.array([0.0, 0.0, -fuel])
        terminal = False
        if action != MINE and self.in_base() and self.cargo.sum() > 0:
            reward[:2] = self.cargo / cfg.capacity
            terminal = True
        return self._observe(), reward, terminal

    def spawn(self) -> "Minecart":
        return Minecart(self.config)

    def reference_point(self, gamma: float) -> np.ndarray:
        return np.array([0.0, 0.0, -200.0])
