from metrics.hypervolume import hypervolume
from metrics.pareto import MetricsError, ParetoFront, nondominated_mask, pareto_filter

__all__ = [
    "MetricsError",
    "ParetoFront",
    "hypervolume",
    "nondominated_mask",
    "pareto_filter",
]
