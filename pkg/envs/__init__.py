from typing import Any, Dict, Optional

from envs.base import (
    DstMapError,
    EnvError,
    EnvSpec,
    InvalidActionError,
    MOEnv,
    UnsupportedEnvError,
)
from envs.deep_sea_treasure import DeepSeaTreasure, DstMap
from envs.minecart import MineSpec, Minecart, MinecartConfig

ENV_IDS = ("dst", "minecart", "minecart-deterministic")


def make_env(env_id: str, options: Optional[Dict[str, Any]] = None) -> MOEnv:
    """
    Builds an environment from its string id.

    Args:
        env_id: One of ``dst``, ``minecart``, ``minecart-deterministic``.
        options: Environment section of the run config (``dst_map``,
            ``dst_treasures``, ``max_episode_steps``, ``minecart`` overrides).
    """
    options = dict(options or {})
    if env_id == "dst":
        treasures = options.get("dst_treasures")
        if treasures:
            dst_map = DstMap.from_cells(treasures, require_convex=options.get("dst_map", "convex") == "convex")
        else:
            dst_map = DstMap.named(options.get("dst_map", "convex"))
        return DeepSeaTreasure(dst_map, int(options.get("max_episode_steps") or 200))
    if env_id in ("minecart", "minecart-deterministic"):
        overrides = dict(options.get("minecart") or {})
        if "mines" in overrides:
            overrides["mines"] = tuple(
                MineSpec(
                    float(m["x"]),
                    float(m["y"]),
                    tuple(m["ore_mean"]),
                    tuple(m.get("ore_std", (0.0, 0.0))),
                )
                for m in overrides["mines"]
            )
        if options.get("max_episode_steps"):
            overrides["max_episode_steps"] = int(options["max_episode_steps"])
        overrides["deterministic"] = env_id == "minecart-deterministic"
        try:
            config = MinecartConfig(**overrides)
        except TypeError as e:
            raise UnsupportedEnvError(f"Invalid minecart option: {e}") from e
        return Minecart(config)
    raise UnsupportedEnvError(f"Unknown environment id '{env_id}', expected one of {ENV_IDS}")


def true_pareto_front(env: MOEnv, gamma: float):
    """Exact Pareto front of ``env`` as an (N, K) array; DST only."""
    return env.true_pareto_front(gamma)


__all__ = [
    "DeepSeaTreasure",
    "DstMap",
    "DstMapError",
    "ENV_IDS",
    "EnvError",
    "EnvSpec",
    "InvalidActionError",
    "MOEnv",
    "MineSpec",
    "Minecart",
    "MinecartConfig",
    "UnsupportedEnvError",
    "make_env",
    "true_pareto_front",
]
