from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

KINDS = ("multi_body", "merge", "hypernet", "hypernet_obs")

# 命令行名称 -> 内部名称
CLI_NAMES = {
    "multi-body": "multi_body",
    "merge": "merge",
    "hypernet": "hypernet",
    "hypernet-obs": "hypernet_obs",
}


class ArchError(ValueError):
    """Raised for unknown architectures, off-simplex weights or mismatched dimensions."""


def default_hidden_dim(kind: str) -> int:
    return 64 if kind in ("hypernet", "hypernet_obs") else 256


def normalize_kind(kind: str) -> str:
    kind = CLI_NAMES.get(kind, kind)
    if kind not in KINDS:
        raise ArchError(f"Unknown architecture '{kind}', expected one of {sorted(CLI_NAMES)}")
    return kind


@dataclass(frozen=True)
class ArchConfig:
    """
    Args:
        kind: One of ``multi_body``, ``merge``, ``hypernet``, ``hypernet_obs``
            (the CLI spellings with dashes are accepted too).
        shared_trunk: Actor and critic share the trunk, and for hypernets the
            first hypernetwork layer.
        hidden_dim: Width of hidden layers; None picks 256 for multi-body and
            merge, 64 for hypernets.
        feature_dim: Width F of the trunk output fed to the heads; None means
            ``hidden_dim``.
        mlp_depth: Number of ReLU layers of the trunk MLP.
    """

    kind: str = "multi_body"
    shared_trunk: bool = True
    hidden_dim: Optional[int] = None
    feature_dim: Optional[int] = None
    mlp_depth: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        if self.hidden_dim is None:
            object.__setattr__(self, "hidden_dim", default_hidden_dim(self.kind))
        if self.feature_dim is None:
            object.__setattr__(self, "feature_dim", self.hidden_dim)
        if self.hidden_dim <= 0 or self.feature_dim <= 0:
            raise ArchError("hidden_dim and feature_dim must be positive")
        if self.mlp_depth < 1:
            raise ArchError(f"mlp_depth must be at least 1, got {self.mlp_depth}")

    @property
    def is_hypernet(self) -> bool:
        return self.kind in ("hypernet", "hypernet_obs")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
