"""Monte-Carlo simulation harness."""

from .channel import Realization, generate_realization, realization_rng
from .clustering import cluster_users, n_clusters
from .config import ConfigError, ScenarioConfig, SchemeSpec, parse_scheme
from .montecarlo import CSV_HEADER, MetricsRow, format_csv, run_monte_carlo

__all__ = [
    "Realization",
    "generate_realization",
    "realization_rng",
    "cluster_users",
    "n_clusters",
    "ConfigError",
    "ScenarioConfig",
    "SchemeSpec",
    "parse_scheme",
    "CSV_HEADER",
    "MetricsRow",
    "format_csv",
    "run_monte_carlo",
]
