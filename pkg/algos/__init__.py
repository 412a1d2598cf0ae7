from algos.balancing import update_beta
from algos.discard import DiscardAction, DiscardState, check_discard
from algos.entropy import EntropyConfig, EntropyController, entropy_step, entropy_target
from algos.losses import Minibatch, a2c_gradient, clipped_surrogate, critic_loss, ppo_actor_loss
from algos.metrics_log import COLUMNS, MetricsLog, MetricsRow
from algos.trainer import (
    ALGOS,
    TrainConfig,
    Trainer,
    TrainingDivergedError,
    TrainResult,
    TrainState,
    train_moa2c,
    train_moppo,
)

__all__ = [
    "ALGOS",
    "COLUMNS",
    "DiscardAction",
    "DiscardState",
    "EntropyConfig",
    "EntropyController",
    "MetricsLog",
    "MetricsRow",
    "Minibatch",
    "TrainConfig",
    "TrainResult",
    "TrainState",
    "Trainer",
    "TrainingDivergedError",
    "a2c_gradient",
    "check_discard",
    "clipped_surrogate",
    "critic_loss",
    "entropy_step",
    "entropy_target",
    "ppo_actor_loss",
    "train_moa2c",
    "train_moppo",
    "update_beta",
]
