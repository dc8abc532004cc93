"""
Tests for the held-out-cell benchmark protocols
"""

import numpy as np
import pytest

from adaptcast.adaptive import EvaluationReport
from adaptcast.benchmarks import (
    SwitchOutcome,
    baseline_single_cell,
    profile_cluster_model,
    regime_switch_trial,
    report_rows,
)
from adaptcast.config import FeatureVariant, PredictorKind
from adaptcast.errors import LeakageError, SeriesError
from adaptcast.pipeline import FrameworkConfig
from adaptcast.synth import DEFAULT_PROFILES, SyntheticSpec, generate


@pytest.fixture
def naive_config() -> FrameworkConfig:
    return FrameworkConfig(kind=PredictorKind.SEASONAL_NAIVE, seed=1)


class TestSingleCellBaseline:
    """Test cases for single-cell baselines"""

    def test_same_cell_trains_before_the_test_weeks(self, naive_config):
        """Test the same-cell protocol on a cell that changes profile in its last week"""
        spec = SyntheticSpec(cells=1, weeks=3, noise_sigma=0.0, regime_switches={0: [(2, 1)]})
        dataset = generate(spec)

        baseline = baseline_single_cell(
            dataset.series, "cell_000", "cell_000", naive_config, test_weeks=1
        )

        assert baseline.test_weeks == 1
        assert baseline.to_dict()["test_weeks"] == 1
        # Only the first test day is forecast from the old profile
        assert 0.0 < baseline.baseline_mae < 1.0

    def test_same_cell_needs_test_weeks(self, naive_config):
        """Test that a same-cell baseline must hold out its test weeks"""
        dataset = generate(SyntheticSpec(cells=1, weeks=2))

        with pytest.raises(LeakageError, match="test_weeks"):
            baseline_single_cell(dataset.series, "cell_000", "cell_000", naive_config)

    def test_nothing_before_test_weeks(self, naive_config):
        """Test that the test weeks cannot cover the whole cell"""
        dataset = generate(SyntheticSpec(cells=1, weeks=1))

        with pytest.raises(SeriesError, match="nothing precedes"):
            baseline_single_cell(
                dataset.series, "cell_000", "cell_000", naive_config, test_weeks=1
            )

    def test_cross_cell_scores_final_weeks(self, naive_config):
        """Test that a cross-cell baseline reports the final-weeks MAE and the ratio"""
        dataset = generate(SyntheticSpec(cells=2, weeks=2, noise_sigma=0.0))

        baseline = baseline_single_cell(
            dataset.series, "cell_001", "cell_000", naive_config, framework_mae=0.0, test_weeks=1
        )

        assert baseline.baseline_mae == pytest.approx(0.0, abs=1e-9)
        assert baseline.ratio is None


class TestReportRows:
    """Test cases for long-format result rows"""

    def test_breakdown_subsets_become_rows(self):
        """Test one row per breakdown subset next to the headline metrics"""
        report = EvaluationReport(
            per_cluster_mae={0: 0.2},
            per_cluster_counts={0: 10},
            weighted_mae=0.2,
            overall_mae=0.2,
            breakdown={"full": 0.2, "last_4w": 0.1},
        )

        rows = report_rows(2, FeatureVariant.UNI, report)

        assert [r["metric"] for r in rows] == ["weighted_mae", "overall_mae", "mae[last_4w]"]
        assert rows[-1]["value"] == 0.1


class TestRegimeSwitchTrial:
    """Test cases for switch detection accounting"""

    def test_hit_before_the_switch_is_not_a_detection(self):
        """Test that being on the new cluster already does not count"""
        outcome = SwitchOutcome(72, 72, 24, on_target_before_switch=True)

        assert outcome.delay == 0
        assert not outcome.success

    def test_noiseless_switch(self):
        """Test a clean switch: right before, detected within a day after"""
        model, profile_clusters = profile_cluster_model(DEFAULT_PROFILES)

        outcome = regime_switch_trial(0, model, profile_clusters, DEFAULT_PROFILES, noise_sigma=0.0)

        assert 0.0 < outcome.pre_switch_accuracy <= 1.0
        assert not outcome.on_target_before_switch
        assert outcome.success
        assert 0 <= outcome.delay <= 24
