"""
Deterministic SVG scatter plots of two-objective fronts.
"""
from __future__ import annotations

import io
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
import numpy as np  # noqa: E402

from metrics.pareto import MetricsError  # noqa: E402
from utils.io import atomic_write_bytes  # noqa: E402

MARGIN = 0.05
# 固定 hashsalt 和 Date, 相同输入得到逐字节相同的 SVG
SVG_RC = {"svg.hashsalt": "dmorl-agent", "svg.fonttype": "path", "path.simplify": False}


def axis_limits(values: np.ndarray, margin: float = MARGIN):
    lo, hi = float(np.min(values)), float(np.max(values))
    span = hi - lo if hi > lo else max(abs(hi), 1.0)
    return lo - margin * span, hi + margin * span


def render_fronts_svg(
    fronts: Sequence[np.ndarray],
    labels: Sequence[str],
    oracle: Optional[np.ndarray] = None,
    title: str = "Pareto fronts",
) -> bytes:
    """
    Overlays K = 2 fronts (and optionally the oracle front) in one scatter.

    Each front is drawn as one group with id ``front-<i>``, the oracle as
    ``oracle``; every point is exactly one marker.

    Raises:
        MetricsError: when a front does not have two objectives.
    """
    arrays = [np.asarray(front, dtype=np.float64).reshape(len(front), -1) for front in fronts]
    if oracle is not None:
        oracle = np.asarray(oracle, dtype=np.float64)
    for array in arrays + ([oracle] if oracle is not None else []):
        if array.size and array.shape[1] != 2:
            raise MetricsError(
                f"Plotting needs K = 2 objectives, got K = {array.shape[1]}; use 'metrics' for higher K"
            )
    nonempty = [a for a in arrays if len(a)] + ([oracle] if oracle is not None and len(oracle) else [])

    with rc_context(SVG_RC):
        fig = Figure(figsize=(6.0, 4.5))
        ax = fig.subplots()
        if oracle is not None and len(oracle):
            ax.scatter(oracle[:, 0], oracle[:, 1], marker="x", s=40, color="black", label="oracle", gid="oracle")
        for i, (array, label) in enumerate(zip(arrays, labels)):
            if len(array):
                ax.scatter(array[:, 0], array[:, 1], s=20, alpha=0.8, label=label, gid=f"front-{i}")
        if nonempty:
            points = np.concatenate(nonempty)
            ax.set_xlim(*axis_limits(points[:, 0]))
            ax.set_ylim(*axis_limits(points[:, 1]))
        ax.set_xlabel("objective 1")
        ax.set_ylabel("objective 2")
        ax.set_title(title)
        if nonempty:
            ax.legend(loc="best")
        buffer = io.BytesIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def plot_fronts(
    path: Path,
    fronts: Sequence[np.ndarray],
    labels: Sequence[str],
    oracle: Optional[np.ndarray] = None,
) -> Path:
    return atomic_write_bytes(Path(path), render_fronts_svg(fronts, labels, oracle))
