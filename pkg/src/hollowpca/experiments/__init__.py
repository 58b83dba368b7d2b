"""Config-driven Monte Carlo harness: experiment registry, runner, and CLI."""

from .cli import cli
from .config import ExperimentConfig, ExperimentSpec, ParamField, load_config, resolve_config
from .engine import SCHEMA_COMMENT, ReplicateRecord, RunResult, run_experiment
from .runners import EXPERIMENTS, mu_norm_for_snr

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentSpec",
    "ParamField",
    "ReplicateRecord",
    "RunResult",
    "SCHEMA_COMMENT",
    "cli",
    "load_config",
    "mu_norm_for_snr",
    "resolve_config",
    "run_experiment",
]
