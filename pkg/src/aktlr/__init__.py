"""Acoustic knowledge-guided transfer linear regression for cross-corpus
speech emotion recognition."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    AktlrModel,
    ConfigError,
    CorpusDataset,
    DataValidationError,
    ExperimentConfig,
    GroupPartition,
    Hyperparams,
    load_dataset,
    one_hot,
    split_rows,
    standardize,
)
from .evaluation import ConfusionMatrix, GridSpec, evaluate, grid_search, sensitivity_sweep, uar  # noqa: E402
from .model import predict, predict_batch, train  # noqa: E402

__all__ = [
    "AktlrModel",
    "ConfigError",
    "ConfusionMatrix",
    "CorpusDataset",
    "DataValidationError",
    "ExperimentConfig",
    "GridSpec",
    "GroupPartition",
    "Hyperparams",
    "evaluate",
    "grid_search",
    "load_dataset",
    "one_hot",
    "predict",
    "predict_batch",
    "sensitivity_sweep",
    "split_rows",
    "standardize",
    "train",
    "uar",
]
