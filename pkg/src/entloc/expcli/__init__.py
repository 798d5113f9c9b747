"""Experiment runner and command-line interface."""

from .config import ExperimentConfig, ExperimentKind, load_config
from .experiments import run_experiment
from .output import ResultRow, rows_to_csv, rows_to_json

__all__ = ["ExperimentConfig", "ExperimentKind", "ResultRow", "load_config", "rows_to_csv", "rows_to_json", "run_experiment"]
