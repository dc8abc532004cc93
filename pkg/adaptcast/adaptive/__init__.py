"""
Adaptive assignment of per-cluster predictors to unseen streams
"""

from .engine import (
    AssignmentTrace,
    OodPolicy,
    ReclusterResult,
    StepRecord,
    assign_window,
    ood_recluster,
    run_stream,
)
from .evaluation import EvaluationReport, evaluate, weighted_mae

__all__ = [
    "AssignmentTrace",
    "EvaluationReport",
    "OodPolicy",
    "ReclusterResult",
    "StepRecord",
    "assign_window",
    "evaluate",
    "ood_recluster",
    "run_stream",
    "weighted_mae",
]
