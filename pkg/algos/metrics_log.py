from dataclasses import astuple, dataclass, field
from pathlib import Path
from typing import List

from utils.io import render_csv, write_csv


@dataclass(frozen=True)
class MetricsRow:
    iteration: int
    env_steps: int
    mean_scalarized_return: float
    entropy: float
    lam: float
    beta_c: float
    actor_grad_norm: float
    critic_grad_norm: float
    discarded: int


COLUMNS = [
    "iteration",
    "env_steps",
    "mean_scalarized_return",
    "entropy",
    "lambda",
    "beta_c",
    "actor_grad_norm",
    "critic_grad_norm",
    "discarded",
]


@dataclass
class MetricsLog:
    rows: List[MetricsRow] = field(default_factory=list)

    def append(self, row: MetricsRow) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def render(self) -> str:
        return render_csv(COLUMNS, (astuple(row) for row in self.rows))

    def write(self, path: Path) -> Path:
        return write_csv(path, COLUMNS, (astuple(row) for row in self.rows))

    def discards_per_window(self, window: int = 100) -> int:
        """Largest number of discarded iterations within any trailing window."""
        flags = [row.discarded for row in self.rows]
        worst = 0
        for end in range(1, len(flags) + 1):
            worst = max(worst, sum(flags[max(0, end - window) : end]))
        return worst
