"""
adaptcast - adaptive per-cluster traffic forecasting for cellular networks
"""

__version__ = "0.1.0"
__author__ = "adaptcast Team"
__description__ = "DTW clustering, per-cluster LSTM forecasting and adaptive cluster assignment"

from .config import AssignMode, FeatureVariant, PredictorKind
from .pipeline import FittedFramework, FrameworkConfig, fit_framework, predict_stream

__all__ = [
    "AssignMode",
    "FeatureVariant",
    "FittedFramework",
    "FrameworkConfig",
    "PredictorKind",
    "fit_framework",
    "predict_stream",
]
