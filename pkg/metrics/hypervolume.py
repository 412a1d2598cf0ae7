import numpy as np

from metrics.pareto import MetricsError

SUPPORTED_DIMS = (2, 3, 4)


def _slice_volume(points: np.ndarray, ref: np.ndarray) -> float:
    """Volume dominated by ``points`` (all strictly above ``ref``), by slicing along the last axis."""
    if points.shape[1] == 1:
        return float(points[:, 0].max() - ref[0])
    order = np.argsort(-points[:, -1], kind="stable")
    points = points[order]
    volume = 0.0
    for i in range(len(points)):
        lower = points[i + 1, -1] if i + 1 < len(points) else ref[-1]
        height = points[i, -1] - lower
        if height > 0:
            volume += height * _slice_volume(points[: i + 1, :-1], ref[:-1])
    return volume


def hypervolume(points, reference) -> float:
    """
    Exact Lebesgue measure of the union of boxes [ref, p] over ``points``.

    Points that do not strictly exceed the reference on every axis contribute
    nothing. Supports K in {2, 3, 4}.
    """
    reference = np.asarray(reference, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64).reshape(-1, len(reference))
    if len(reference) not in SUPPORTED_DIMS:
        raise MetricsError(f"Hypervolume supports K in {SUPPORTED_DIMS}, got K={len(reference)}")
    if not np.all(np.isfinite(reference)):
        raise MetricsError("Hypervolume reference point must be finite")
    points = points[np.all(points > reference, axis=1)]
    if len(points) == 0:
        return 0.0
    return _slice_volume(points, reference)
