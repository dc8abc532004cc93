"""
Cluster-weighted MAE over an assignment trace
"""

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..config import HOURS_PER_WEEK
from ..errors import EvaluationError, MissingGroundTruthError
from .engine import AssignmentTrace

logger = logging.getLogger(__name__)


@dataclass
class EvaluationReport:
    """Per-cluster and weighted MAE of one stream, in normalized units"""

    per_cluster_mae: dict[int, float]
    per_cluster_counts: dict[int, int]
    weighted_mae: float
    overall_mae: float
    configuration: str | None = None
    k: int | None = None
    cadence: int | None = None
    excluded_steps: int = 0
    breakdown: dict[str, float] = field(default_factory=dict)

    @property
    def total_count(self) -> int:
        return sum(self.per_cluster_counts.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "configuration": self.configuration,
            "k": self.k,
            "cadence": self.cadence,
            "weighted_mae": self.weighted_mae,
            "overall_mae": self.overall_mae,
            "per_cluster_mae": {str(c): v for c, v in sorted(self.per_cluster_mae.items())},
            "per_cluster_counts": {
                str(c): v for c, v in sorted(self.per_cluster_counts.items())
            },
            "excluded_steps": self.excluded_steps,
            "breakdown": dict(sorted(self.breakdown.items())),
        }


def weighted_mae(per_cluster_mae: dict[int, float], counts: dict[int, int]) -> float:
    """Sum over clusters of count_k / total * MAE_k"""
    total = sum(counts.values())
    if total == 0:
        raise EvaluationError("No samples to weight")
    return float(sum(counts[c] / total * per_cluster_mae[c] for c in per_cluster_mae))


def tail_key(weeks: int) -> str:
    return f"last_{weeks}w"


def _breakdown(
    errors: np.ndarray, steps: np.ndarray, ood: np.ndarray, tail_weeks: int | None
) -> dict[str, float]:
    breakdown = {"full": float(errors.mean())}
    if tail_weeks is not None:
        tail = steps > steps.max() - tail_weeks * HOURS_PER_WEEK
        breakdown[tail_key(tail_weeks)] = float(errors[tail].mean())
    if ood.any() and not ood.all():
        breakdown["in_distribution"] = float(errors[~ood].mean())
        breakdown["ood"] = float(errors[ood].mean())
    return breakdown


def evaluate(
    trace: AssignmentTrace, configuration: str | None = None, tail_weeks: int | None = None
) -> EvaluationReport:
    """
    Score a trace: MAE per serving cluster and their sample-weighted average

    Errors are divided by the trace's ``eval_range`` so they read on the
    [0, 1] scale. Warm-up steps are excluded.

    The breakdown holds the MAE of the full stream (``full``), of its final
    ``tail_weeks`` weeks (``last_<w>w``) when requested, and of in-distribution
    versus OOD steps when the trace has both.

    Raises:
        EvaluationError: Empty trace, no scored steps or a non-positive tail
        MissingGroundTruthError: The trace has no ground truth
    """
    if len(trace) == 0:
        raise EvaluationError("Cannot evaluate an empty trace")
    if trace.truth is None:
        raise MissingGroundTruthError(f"Trace of {trace.cell_id} has no ground truth")
    if tail_weeks is not None and tail_weeks < 1:
        raise EvaluationError(f"tail_weeks must be >= 1, got {tail_weeks}")

    scored = ~trace.warmup
    if not scored.any():
        raise EvaluationError(f"Trace of {trace.cell_id} has only warm-up steps")
    errors = np.abs(trace.predictions - trace.truth)[scored] / trace.eval_range
    clusters = trace.chosen[scored]

    per_cluster = {}
    counts = {}
    for cluster in np.unique(clusters):
        mask = clusters == cluster
        per_cluster[int(cluster)] = float(errors[mask].mean())
        counts[int(cluster)] = int(mask.sum())

    report = EvaluationReport(
        per_cluster_mae=per_cluster,
        per_cluster_counts=counts,
        weighted_mae=weighted_mae(per_cluster, counts),
        overall_mae=float(errors.mean()),
        configuration=configuration,
        k=trace.k,
        cadence=trace.cadence,
        excluded_steps=int((~scored).sum()),
        breakdown=_breakdown(errors, trace.steps[scored], trace.ood[scored], tail_weeks),
    )
    logger.info(
        f"Evaluated {trace.cell_id}: weighted MAE {report.weighted_mae:.4f} "
        f"over {report.total_count} steps"
    )
    return report
