from momdp.popart import PopArtStats, popart_update
from momdp.returns import advantages, discounted_return, reward_to_go, scalarize_advantages
from momdp.rollout import (
    Trajectory,
    TrajectoryBatch,
    Transition,
    collect_batch,
    dump_trajectories,
    rollout,
    sample_action,
)
from momdp.weights import (
    WeightError,
    check_weight,
    sample_weight,
    scalarize,
    simplex_samples,
    weight_grid,
)

__all__ = [
    "PopArtStats",
    "Trajectory",
    "TrajectoryBatch",
    "Transition",
    "WeightError",
    "advantages",
    "check_weight",
    "collect_batch",
    "discounted_return",
    "dump_trajectories",
    "popart_update",
    "reward_to_go",
    "rollout",
    "sample_action",
    "sample_weight",
    "scalarize",
    "scalarize_advantages",
    "simplex_samples",
    "weight_grid",
]
