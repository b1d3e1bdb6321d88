"""Metrics, experiment configuration, training and reporting."""
from .config import ExperimentConfig
from .experiment import (
    ExperimentResult,
    emit_reports,
    evaluate,
    preset_configs,
    run_experiment,
    run_sweep,
)
from .metrics import ConfusionCounts, Metrics, compute_metrics
from .trainer import LossHistory, train_model
