from nets.actor_critic import (
    ActorCriticNet,
    ActorCriticOutput,
    ActorCriticPolicy,
    CriticHeadParams,
)
from nets.config import ArchConfig, ArchError, normalize_kind

__all__ = [
    "ActorCriticNet",
    "ActorCriticOutput",
    "ActorCriticPolicy",
    "ArchConfig",
    "ArchError",
    "CriticHeadParams",
    "normalize_kind",
]
