"""
Tests for cluster-weighted MAE
"""

import numpy as np
import pytest

from adaptcast.adaptive import AssignmentTrace, evaluate, weighted_mae
from adaptcast.config import AssignMode
from adaptcast.errors import EvaluationError, MissingGroundTruthError


def make_trace(chosen, predictions, truth, warmup=None, eval_range=1.0, ood=None) -> AssignmentTrace:
    count = len(chosen)
    return AssignmentTrace(
        cell_id="held",
        n=4,
        cadence=1,
        assign_mode=AssignMode.TRAILING,
        steps=np.arange(count) + 4,
        scores=np.zeros((count, 2)),
        chosen=np.asarray(chosen),
        reevaluated=np.ones(count, dtype=bool),
        predictions=np.asarray(predictions, dtype=float),
        truth=None if truth is None else np.asarray(truth, dtype=float),
        warmup=np.zeros(count, dtype=bool) if warmup is None else np.asarray(warmup),
        ood=np.zeros(count, dtype=bool) if ood is None else np.asarray(ood),
        eval_range=eval_range,
    )


class TestWeightedMae:
    """Test cases for the weighting rule"""

    def test_weights_by_sample_count(self):
        """Test sum of count_k / total * MAE_k"""
        assert weighted_mae({0: 1.0, 1: 0.0}, {0: 1, 1: 3}) == pytest.approx(0.25)

    def test_no_samples(self):
        """Test that empty counts cannot be weighted"""
        with pytest.raises(EvaluationError):
            weighted_mae({}, {})


class TestEvaluate:
    """Test cases for trace evaluation"""

    def test_per_cluster_and_weighted(self):
        """Test per-cluster MAE and the weighted total"""
        trace = make_trace([0, 0, 1, 1], [1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0])

        report = evaluate(trace, "uni")

        assert report.per_cluster_mae == {0: 0.5, 1: 0.0}
        assert report.per_cluster_counts == {0: 2, 1: 2}
        assert report.weighted_mae == pytest.approx(0.25)
        assert report.overall_mae == pytest.approx(0.25)
        assert report.to_dict()["configuration"] == "uni"

    def test_errors_scaled_by_range(self):
        """Test normalization of errors by the evaluation range"""
        trace = make_trace([0, 0], [10.0, 0.0], [0.0, 0.0], eval_range=20.0)

        assert evaluate(trace).weighted_mae == pytest.approx(0.25)

    def test_warmup_excluded(self):
        """Test that warm-up steps do not count"""
        trace = make_trace([0, 0, 0], [5.0, 1.0, 1.0], [0.0, 1.0, 1.0], warmup=[True, False, False])

        report = evaluate(trace)

        assert report.weighted_mae == 0.0
        assert report.excluded_steps == 1

    def test_missing_truth(self):
        """Test that a forecast-only trace cannot be scored"""
        with pytest.raises(MissingGroundTruthError):
            evaluate(make_trace([0], [1.0], None))

    def test_only_warmup(self):
        """Test that an all-warm-up trace has nothing to score"""
        with pytest.raises(EvaluationError, match="warm-up"):
            evaluate(make_trace([0], [1.0], [1.0], warmup=[True]))


class TestBreakdown:
    """Test cases for the per-subset MAE breakdown"""

    def test_full_stream_only_by_default(self):
        """Test that the breakdown always carries the full-stream MAE"""
        trace = make_trace([0, 1], [1.0, 0.0], [0.0, 0.0])

        report = evaluate(trace)

        assert report.breakdown == {"full": pytest.approx(0.5)}
        assert report.to_dict()["breakdown"] == {"full": pytest.approx(0.5)}

    def test_final_weeks(self):
        """Test scoring the last week separately from the whole stream"""
        truth = [0.0] * 32 + [1.0] * 168
        trace = make_trace([0] * 200, [1.0] * 200, truth)

        report = evaluate(trace, tail_weeks=1)

        assert report.breakdown["full"] == pytest.approx(32 / 200)
        assert report.breakdown["last_1w"] == 0.0

    def test_tail_longer_than_stream(self):
        """Test that a tail covering the whole stream equals the full MAE"""
        trace = make_trace([0, 0], [1.0, 0.0], [0.0, 0.0])

        report = evaluate(trace, tail_weeks=4)

        assert report.breakdown["last_4w"] == report.breakdown["full"]

    def test_ood_split(self):
        """Test in-distribution and OOD steps scored apart"""
        trace = make_trace(
            [0, 0, 1, 1], [1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], ood=[True, False, False, False]
        )

        report = evaluate(trace)

        assert report.breakdown["ood"] == 1.0
        assert report.breakdown["in_distribution"] == pytest.approx(1 / 3)

    def test_invalid_tail(self):
        """Test that the tail must span at least one week"""
        with pytest.raises(EvaluationError, match="tail_weeks"):
            evaluate(make_trace([0], [1.0], [1.0]), tail_weeks=0)
