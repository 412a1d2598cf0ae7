from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from envs.base import MOEnv
from metrics.hypervolume import hypervolume
from metrics.pareto import MetricsError, ParetoFront, pareto_filter
from momdp.returns import discounted_return
from momdp.rollout import Policy, rollout
from momdp.weights import simplex_samples, weight_grid
from utils.io import render_csv, write_csv
from utils.logger import logger
from utils.seeding import RngStreams


@dataclass(frozen=True)
class EvalProtocol:
    """
    Args:
        grid_size: Number of equally spaced weights for K = 2.
        num_samples: Number of uniform simplex weights for K >= 3.
        episodes: Rollouts per weight.
        gamma: Discount of the reported returns.
        seed: Master seed of the evaluation streams.
        workers: Threads used for the rollouts.
    """

    grid_size: int = 101
    num_samples: int = 64
    episodes: int = 10
    gamma: float = 0.99
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        for key in ("grid_size", "num_samples", "episodes"):
            if getattr(self, key) < 1:
                raise MetricsError(f"eval.{key} must be at least 1, got {getattr(self, key)}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class EvalSweep:
    """Mean discounted returns Ĵ(α) per protocol weight, for each requested discount."""

    alphas: np.ndarray
    returns: Dict[float, np.ndarray]


def protocol_weights(protocol: EvalProtocol, num_objectives: int) -> np.ndarray:
    if num_objectives == 2:
        return weight_grid(protocol.grid_size)
    return simplex_samples(RngStreams(protocol.seed).eval_weights(), num_objectives, protocol.num_samples)


def evaluate_returns(
    policy: Policy,
    env: MOEnv,
    protocol: EvalProtocol,
    gammas: Optional[Sequence[float]] = None,
) -> EvalSweep:
    """
    Runs ``protocol.episodes`` stochastic rollouts per weight and averages
    their discounted returns. Each (weight, episode) pair has its own streams
    and environment copy.
    """
    gammas = tuple(gammas) if gammas is not None else (protocol.gamma,)
    alphas = protocol_weights(protocol, env.spec.num_objectives)
    streams = RngStreams(protocol.seed)

    def run(job: Tuple[int, int]) -> Dict[float, np.ndarray]:
        i, j = job
        traj = rollout(
            env.spawn(),
            policy,
            alphas[i],
            env.spec.max_episode_steps,
            streams.eval(i, j),
            streams.eval_env(i, j),
        )
        return {gamma: discounted_return(traj.rewards, gamma) for gamma in gammas}

    jobs = [(i, j) for i in range(len(alphas)) for j in range(protocol.episodes)]
    if protocol.workers > 1:
        with ThreadPoolExecutor(max_workers=protocol.workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    returns = {}
    for gamma in gammas:
        per_job = np.array([result[gamma] for result in results])
        returns[gamma] = per_job.reshape(len(alphas), protocol.episodes, -1).mean(axis=1)
    logger.debug(f"Evaluated {len(alphas)} weights x {protocol.episodes} episodes")
    return EvalSweep(alphas, returns)


# ----------------------------------------------------------------------
# metrics from an evaluation sweep
# ----------------------------------------------------------------------


def utilities(alphas: np.ndarray, returns: np.ndarray) -> np.ndarray:
    return np.einsum("wk,wk->w", alphas, returns)


def support_values(alphas: np.ndarray, front: np.ndarray) -> np.ndarray:
    """max_{p in front} αᵀp for every weight."""
    front = np.asarray(front, dtype=np.float64)
    if front.size == 0:
        raise MetricsError("Reference front is empty")
    return (alphas @ front.T).max(axis=1)


def eu_from_returns(alphas: np.ndarray, returns: np.ndarray) -> float:
    return float(np.mean(utilities(alphas, returns)))


def mul_from_returns(alphas: np.ndarray, returns: np.ndarray, reference_front: Optional[np.ndarray]) -> float:
    if reference_front is None:
        raise MetricsError("Maximum utility loss needs a reference front")
    return float(np.max(support_values(alphas, reference_front) - utilities(alphas, returns)))


def front_from_returns(alphas: np.ndarray, returns: np.ndarray, reference: Optional[np.ndarray] = None) -> ParetoFront:
    front = pareto_filter(returns, alphas)
    front.reference = None if reference is None else np.asarray(reference, dtype=np.float64)
    return front


def expected_utility(policy: Policy, env: MOEnv, protocol: EvalProtocol) -> float:
    """Mean over protocol weights of αᵀĴ(α)."""
    sweep = evaluate_returns(policy, env, protocol)
    return eu_from_returns(sweep.alphas, sweep.returns[protocol.gamma])


def max_utility_loss(
    policy: Policy, env: MOEnv, protocol: EvalProtocol, reference_front: Optional[np.ndarray]
) -> float:
    """Worst utility regret over protocol weights against ``reference_front``; may be negative."""
    if reference_front is None:
        raise MetricsError("Maximum utility loss needs a reference front")
    sweep = evaluate_returns(policy, env, protocol)
    return mul_from_returns(sweep.alphas, sweep.returns[protocol.gamma], reference_front)


def extract_front(policy: Policy, env: MOEnv, protocol: EvalProtocol) -> ParetoFront:
    """Evaluates Ĵ on the weight grid and keeps the nondominated points, tagged with α."""
    sweep = evaluate_returns(policy, env, protocol)
    return front_from_returns(sweep.alphas, sweep.returns[protocol.gamma], env.reference_point(protocol.gamma))


def metrics_report(
    alphas: np.ndarray,
    returns: np.ndarray,
    reference: np.ndarray,
    reference_front: Optional[np.ndarray],
    suffix: str = "",
) -> Dict[str, float]:
    """hv, eu and (when a reference front exists) mul for one set of evaluated returns."""
    report = {
        f"hv{suffix}": hypervolume(pareto_filter(returns).points, reference) if len(returns) else 0.0,
        f"eu{suffix}": eu_from_returns(alphas, returns) if len(returns) else 0.0,
    }
    if reference_front is not None and len(returns):
        report[f"mul{suffix}"] = mul_from_returns(alphas, returns, reference_front)
    return report


# ----------------------------------------------------------------------
# files
# ----------------------------------------------------------------------


def front_header(num_objectives: int) -> list:
    return [f"alpha_{k + 1}" for k in range(num_objectives)] + [f"ret_{k + 1}" for k in range(num_objectives)]


def write_front_csv(path: Path, alphas: np.ndarray, returns: np.ndarray) -> Path:
    """One row per evaluated weight, before filtering."""
    k = alphas.shape[1]
    rows = [[*map(float, a), *map(float, r)] for a, r in zip(alphas, returns)]
    return write_csv(path, front_header(k), rows)


def read_front_csv(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reads a front file written by ``write_front_csv``.

    Returns:
        (alphas, returns), both (N, K); N may be 0.
    """
    path = Path(path)
    if not path.is_file():
        raise MetricsError(f"Front file not found: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MetricsError(f"{path}:1: empty front file") from None
        if len(header) < 4 or len(header) % 2:
            raise MetricsError(f"{path}:1: header must be alpha_1..alpha_K,ret_1..ret_K")
        k = len(header) // 2
        if header != front_header(k):
            raise MetricsError(f"{path}:1: header must be {','.join(front_header(k))}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 * k:
                raise MetricsError(f"{path}:{line_no}: expected {2 * k} fields, got {len(row)}")
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise MetricsError(f"{path}:{line_no}: non-numeric field") from None
            if not np.all(np.isfinite(values)):
                raise MetricsError(f"{path}:{line_no}: non-finite field")
            rows.append(values)
    data = np.array(rows, dtype=np.float64).reshape(-1, 2 * k)
    return data[:, :k], data[:, k:]


def render_report(report: Dict[str, float]) -> str:
    return render_csv(["metric", "value"], [[key, float(value)] for key, value in report.items()])


def write_report(path: Path, report: Dict[str, float]) -> Path:
    return write_csv(path, ["metric", "value"], [[key, float(value)] for key, value in report.items()])


def read_report(path: Path) -> Dict[str, float]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        next(reader, None)
        return {row[0]: float(row[1]) for row in reader if row}
