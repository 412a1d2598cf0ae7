# Default experiment settings
# None 表示按环境/架构自动选择

# Environment Configuration
ENV_CONFIG = {
    "id": None,  # dst / minecart / minecart-deterministic, 必须指定
    "dst_map": "convex",  # convex / classic
    "dst_treasures": None,  # [[row, col, value], ...] 内联地图, 覆盖 dst_map
    "max_episode_steps": None,  # None: DST 200, Minecart 1000
    "minecart": None,  # MinecartConfig 字段覆盖, 例如 {"capacity": 1.5}
}

# Network Architecture Configuration
ARCH_CONFIG = {
    "kind": "multi-body",  # multi-body / merge / hypernet / hypernet-obs
    "shared_trunk": True,
    "hidden_dim": None,  # None: multi-body/merge 256, hypernet 64
    "feature_dim": None,  # None: 与 hidden_dim 相同
    "mlp_depth": 2,
}

# Training Configuration
TRAIN_CONFIG = {
    "gamma": 0.99,
    "batch_trajectories": 8,
    "ppo_epochs": 4,
    "a2c_epochs": 1,
    "minibatches": 8,
    "clip_eps": 0.2,
    "total_steps": 100_000,  # DST 1e5, Minecart 4e6
    "lr": 1e-3,  # 网格 {3e-4, 1e-3, 3e-3}
    "critic_ratio": 1.0,  # C, 网格 {1, 3, 10, 30}
    "critic_updates": 2,  # F, 非共享主干时 critic 的更新次数
    "delta": 0.001,  # β_c 滑动平均系数
    "beta_init": 1.0,
    "max_grad_norm": 0.5,
    "critic_max_grad_norm": 0.5,
    "critic_weight_decay": 0.01,
    "popart_step_size": 0.001,
    "use_popart": None,  # None: hypernet 关闭, 其它开启
    "normalized_scalarization": True,
    "dynamic_beta": True,
    "max_episode_steps": None,
    "checkpoint_interval": 50,
    "discard_warmup": 30,
    "discard_window": 100,
    "discard_budget": 5,
    "collapse_steps": 200,
    "max_resets": 3,
    "log_interval": 10,
}

# Entropy Control Configuration
ENTROPY_CONFIG = {
    "schedule": "custom",  # linear / cosine / custom / fixed
    "h_min": None,  # None: DST 0.1, 其它 0.4
    "h_max": None,  # None: log|A|
    "lambda_init": 0.01,
    "damping": 0.01,
    "eta_tilde": None,  # None: lr / 10
    "fixed_lambda": 0.01,  # 固定系数模式, 网格 {1e-1, 1e-2, 1e-3}
}

# Evaluation Protocol Configuration
EVAL_CONFIG = {
    "grid_size": 101,
    "num_samples": 64,
    "episodes": 10,
    "gamma": 0.99,
    "seed": 0,
    "workers": 1,
}

# Run Configuration
RUN_CONFIG = {
    "algo": "moppo",  # moppo / moa2c
    "seed": 0,
    "out_dir": "runs/default",
    "rollout_workers": 1,
    "dump_trajectories": False,
    "eval_after_train": False,
}

SECTIONS = {
    "env": ENV_CONFIG,
    "arch": ARCH_CONFIG,
    "train": TRAIN_CONFIG,
    "entropy": ENTROPY_CONFIG,
    "eval": EVAL_CONFIG,
    "run": RUN_CONFIG,
}
