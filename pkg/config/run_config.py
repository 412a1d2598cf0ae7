"""
Run configuration: defaults from ``config.settings``, then a YAML file, then
``DMORL_<SECTION>_<KEY>`` environment variables, then explicit overrides
(``section.key`` -> value). Later sources win. Unknown keys are errors.
"""
from __future__ import annotations

import copy
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import yaml

from algos.entropy import SCHEDULES, EntropyConfig
from algos.trainer import ALGOS, TrainConfig, default_h_min, default_use_popart
from config.settings import SECTIONS
from envs import ENV_IDS
from metrics.evaluation import EvalProtocol
from nets.config import ArchConfig, ArchError, CLI_NAMES, KINDS

ENV_PREFIX = "DMORL_"


class ConfigError(ValueError):
    """A configuration value is missing, unknown or out of range; ``key`` names it."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key} {message}")


@dataclass(frozen=True)
class EnvSection:
    id: str
    dst_map: str = "convex"
    dst_treasures: Optional[Tuple[Tuple[float, ...], ...]] = None
    max_episode_steps: Optional[int] = None
    minecart: Optional[Dict[str, Any]] = None

    def options(self) -> Dict[str, Any]:
        return {
            "dst_map": self.dst_map,
            "dst_treasures": self.dst_treasures,
            "max_episode_steps": self.max_episode_steps,
            "minecart": self.minecart,
        }


@dataclass(frozen=True)
class RunSection:
    algo: str = "moppo"
    seed: int = 0
    out_dir: str = "runs/default"
    rollout_workers: int = 1
    dump_trajectories: bool = False
    eval_after_train: bool = False


EvalProtocolConfig = EvalProtocol


@dataclass(frozen=True)
class RunConfig:
    env: EnvSection
    arch: ArchConfig
    train: TrainConfig
    entropy: EntropyConfig
    eval: EvalProtocolConfig
    run: RunSection

    def to_dict(self) -> Dict[str, Any]:
        """Resolved snapshot, with the same sections and keys as the config file."""
        snapshot = {
            "env": asdict(self.env),
            "arch": asdict(self.arch),
            "train": self.train.to_dict(),
            "entropy": self.entropy.to_dict(),
            "eval": self.eval.to_dict(),
            "run": asdict(self.run),
        }
        treasures = snapshot["env"]["dst_treasures"]
        if treasures is not None:
            snapshot["env"]["dst_treasures"] = [list(cell) for cell in treasures]
        return snapshot

    @classmethod
    def from_dict(cls, snapshot: Mapping[str, Mapping[str, Any]]) -> "RunConfig":
        return load_config(sections=snapshot, environ={})


# ----------------------------------------------------------------------
# coercion and validation
# ----------------------------------------------------------------------


def _coerce(key: str, value: Any, default: Any) -> Any:
    """Parses strings from env vars and ``--set`` flags into the default's type."""
    if not isinstance(value, str):
        if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        return value
    text = value.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(float(text)) if float(text).is_integer() else int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {value!r} as {type(default).__name__}") from None
    if text.lower() in ("none", "null", "~", ""):
        return None
    # 默认值为 None 的键: 先按数字解析 (YAML 1.1 不认 1e-3), 再交给 YAML
    try:
        number = float(text)
    except ValueError:
        pass
    else:
        return int(number) if number.is_integer() and "." not in text and "e" not in text.lower() else number
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def _set(merged: Dict[str, Dict[str, Any]], dotted: str, value: Any) -> None:
    section, _, key = dotted.partition(".")
    if section not in merged:
        raise ConfigError(dotted, f"is not a config section (expected one of {sorted(merged)})")
    if key not in merged[section]:
        raise ConfigError(dotted, "is not a known config key")
    merged[section][key] = _coerce(dotted, value, SECTIONS[section][key])


Check = Tuple[str, Callable[[Any], bool], str]

_RULES = (
    ("train.gamma", lambda v: 0.0 <= v < 1.0, "must be in [0, 1)"),
    ("train.clip_eps", lambda v: 0.0 < v < 1.0, "must be in (0, 1)"),
    ("train.total_steps", lambda v: v >= 0, "must be non-negative"),
    ("train.lr", lambda v: v > 0, "must be positive"),
    ("train.critic_ratio", lambda v: v > 0, "must be positive"),
    ("train.delta", lambda v: 0.0 <= v <= 1.0, "must be in [0, 1]"),
    ("train.beta_init", lambda v: v >= 0, "must be non-negative"),
    ("train.max_grad_norm", lambda v: v > 0, "must be positive"),
    ("train.critic_max_grad_norm", lambda v: v > 0, "must be positive"),
    ("train.critic_weight_decay", lambda v: v >= 0, "must be non-negative"),
    ("train.popart_step_size", lambda v: 0.0 <= v <= 1.0, "must be in [0, 1]"),
    ("train.max_resets", lambda v: v >= 0, "must be non-negative"),
    ("train.discard_budget", lambda v: v >= 0, "must be non-negative"),
    ("train.discard_warmup", lambda v: v >= 0, "must be non-negative"),
    ("entropy.damping", lambda v: v >= 0, "must be non-negative"),
    ("entropy.fixed_lambda", lambda v: v >= 0, "must be non-negative"),
    ("eval.gamma", lambda v: 0.0 <= v <= 1.0, "must be in [0, 1]"),
    ("run.seed", lambda v: 0 <= v < 2**64, "must be a non-negative 64-bit integer"),
)

_POSITIVE_INTS = (
    "train.batch_trajectories",
    "train.ppo_epochs",
    "train.a2c_epochs",
    "train.minibatches",
    "train.critic_updates",
    "train.checkpoint_interval",
    "train.discard_window",
    "train.collapse_steps",
    "train.log_interval",
    "arch.mlp_depth",
    "eval.grid_size",
    "eval.num_samples",
    "eval.episodes",
    "eval.workers",
    "run.rollout_workers",
)

_OPTIONAL_POSITIVE = (
    "env.max_episode_steps",
    "train.max_episode_steps",
    "arch.hidden_dim",
    "arch.feature_dim",
    "entropy.h_min",
    "entropy.h_max",
    "entropy.eta_tilde",
)


def _get(merged, dotted: str) -> Any:
    section, key = dotted.split(".", 1)
    return merged[section][key]


def _validate(merged: Dict[str, Dict[str, Any]]) -> None:
    env_id = merged["env"]["id"]
    if env_id is None:
        raise ConfigError("env.id", "is required (use --env)")
    if env_id not in ENV_IDS:
        raise ConfigError("env.id", f"must be one of {list(ENV_IDS)}, got {env_id!r}")
    if merged["run"]["algo"] not in ALGOS:
        raise ConfigError("run.algo", f"must be one of {list(ALGOS)}, got {merged['run']['algo']!r}")
    kind = merged["arch"]["kind"]
    if kind not in CLI_NAMES and kind not in KINDS:
        raise ConfigError("arch.kind", f"must be one of {sorted(CLI_NAMES)}, got {kind!r}")
    if merged["entropy"]["schedule"] not in SCHEDULES:
        raise ConfigError("entropy.schedule", f"must be one of {list(SCHEDULES)}")
    if merged["env"]["dst_map"] not in ("convex", "classic"):
        raise ConfigError("env.dst_map", "must be 'convex' or 'classic'")

    for dotted in _POSITIVE_INTS:
        value = _get(merged, dotted)
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ConfigError(dotted, f"must be a positive integer, got {value!r}")
    for dotted in _OPTIONAL_POSITIVE:
        value = _get(merged, dotted)
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0):
            raise ConfigError(dotted, f"must be positive, got {value!r}")
    for dotted, check, message in _RULES:
        value = _get(merged, dotted)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(dotted, f"must be a number, got {value!r}")
        if not check(value):
            raise ConfigError(dotted, f"{message}, got {value!r}")
    h_min, h_max = merged["entropy"]["h_min"], merged["entropy"]["h_max"]
    if h_min is not None and h_max is not None and h_min >= h_max:
        raise ConfigError("entropy.h_min", "must be smaller than entropy.h_max")


# ----------------------------------------------------------------------
# loading
# ----------------------------------------------------------------------


def _read_yaml(path: Path) -> Mapping[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file not found: {path}")
    try:
        with path.open(encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
    except yaml.YAMLError as e:
        raise ConfigError("config", f"is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config", "must be a mapping of sections")
    return data


def load_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
    sections: Optional[Mapping[str, Mapping[str, Any]]] = None,
) -> RunConfig:
    """
    Resolves a RunConfig.

    Args:
        path: Optional YAML file with sections env/arch/train/entropy/eval/run.
        overrides: ``section.key`` -> value, applied last.
        environ: Environment used for ``DMORL_<SECTION>_<KEY>``; defaults to
            ``os.environ``.
        sections: Already parsed file content (used to rebuild a snapshot).
    """
    merged = copy.deepcopy(SECTIONS)
    sources = []
    if path is not None:
        sources.append(_read_yaml(path))
    if sections is not None:
        sources.append(sections)
    for source in sources:
        for section, values in source.items():
            if section not in merged:
                raise ConfigError(str(section), "is not a config section")
            if not isinstance(values, Mapping):
                raise ConfigError(str(section), "must be a mapping")
            for key, value in values.items():
                _set(merged, f"{section}.{key}", value)

    environ = os.environ if environ is None else environ
    for section, values in merged.items():
        for key in values:
            name = f"{ENV_PREFIX}{section.upper()}_{key.upper()}"
            if name in environ:
                _set(merged, f"{section}.{key}", environ[name])

    for dotted, value in (overrides or {}).items():
        if value is not None:
            _set(merged, dotted, value)

    _validate(merged)
    env_id = merged["env"]["id"]
    try:
        arch = ArchConfig(**merged["arch"])
    except ArchError as e:
        raise ConfigError("arch", str(e)) from e
    if merged["train"]["use_popart"] is None:
        merged["train"]["use_popart"] = default_use_popart(arch)
    if merged["entropy"]["h_min"] is None:
        merged["entropy"]["h_min"] = default_h_min(env_id)
    treasures = merged["env"]["dst_treasures"]
    if treasures is not None:
        merged["env"]["dst_treasures"] = tuple(tuple(cell) for cell in treasures)

    return RunConfig(
        env=EnvSection(**merged["env"]),
        arch=arch,
        train=TrainConfig(**merged["train"]),
        entropy=EntropyConfig(**merged["entropy"]),
        eval=EvalProtocol(**merged["eval"]),
        run=RunSection(**merged["run"]),
    )
