"""Configuration-driven experiments, performance profiles and SVG plots."""

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, MethodSpec, load_config, parse_config
from .plot import plot_traces
from .profile import PROFILE_METRICS, ProfileTable, final_metric, performance_profile
from .runner import RunSpec, build_problem, execute_run, expand_runs, run_experiment

__all__ = [
    "EXPERIMENTS", "PROFILE_METRICS", "ConfigError", "ExperimentConfig", "MethodSpec", "ProfileTable",
    "RunSpec", "build_problem", "execute_run", "expand_runs", "final_metric", "load_config",
    "parse_config", "performance_profile", "plot_traces", "run_experiment",
]
