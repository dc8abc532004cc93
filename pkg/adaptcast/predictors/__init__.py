"""
Per-cluster forecasters

Each family implements BasePredictor and registers itself on import.
"""

from . import lstm, seasonal_naive
from .base import (
    BasePredictor,
    PredictorModel,
    PredictorSpec,
    TrainingProtocol,
    forward,
    predict_batch,
)
from .lstm import LSTMPredictor, lstm_parameter_count
from .registry import PredictorRegistry
from .seasonal_naive import SeasonalNaivePredictor
from .training import (
    GradientCheckResult,
    PerClusterTraining,
    attribute_windows,
    gradient_check,
    train,
    train_per_cluster,
)
from .windows import WindowSet, make_windows, split_windows

__all__ = [
    "BasePredictor",
    "GradientCheckResult",
    "LSTMPredictor",
    "PerClusterTraining",
    "PredictorModel",
    "PredictorRegistry",
    "PredictorSpec",
    "SeasonalNaivePredictor",
    "TrainingProtocol",
    "WindowSet",
    "attribute_windows",
    "forward",
    "gradient_check",
    "lstm_parameter_count",
    "make_windows",
    "predict_batch",
    "split_windows",
    "train",
    "train_per_cluster",
]
