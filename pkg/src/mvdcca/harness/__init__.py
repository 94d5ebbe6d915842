from .config import ConfigError, ExperimentConfig, config_from_mapping, load_config
from .experiment import (CSV_HEADER, Dataset, MetricsRow, run_experiment, run_standard,
                         run_unseen, summarize, write_csv)
from .metrics import auroc, average_precision
from .training import (Adam, DccaResult, TrainingError, ViewModel, finetune_view,
                       make_encoders, train_dcca)

__all__ = [
    "Adam", "CSV_HEADER", "ConfigError", "Dataset", "DccaResult", "ExperimentConfig",
    "MetricsRow", "TrainingError", "ViewModel", "auroc", "average_precision",
    "config_from_mapping", "finetune_view", "load_config", "make_encoders",
    "run_experiment", "run_standard", "run_unseen", "summarize", "train_dcca", "write_csv",
]
