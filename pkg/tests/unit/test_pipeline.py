"""
Tests for the end-to-end framework helpers
"""

import numpy as np
import pytest

from adaptcast.adaptive import evaluate
from adaptcast.config import PEAK_FLAG, FeatureVariant, PredictorKind
from adaptcast.errors import LeakageError, SeriesError
from adaptcast.pipeline import (
    FrameworkConfig,
    assert_no_leakage,
    fit_framework,
    predict_stream,
    prepare_stream,
    prepare_training,
    training_cells,
)
from adaptcast.synth import SyntheticSpec, generate, holdout_split
from adaptcast.timeseries import engineer_peak_features, normalize


@pytest.fixture
def naive_config() -> FrameworkConfig:
    return FrameworkConfig(k=2, kind=PredictorKind.SEASONAL_NAIVE, seed=1)


class TestPrepareTraining:
    """Test cases for training preparation"""

    def test_segments_and_stats(self, small_dataset, naive_config):
        """Test one stats entry per series and one segment per day"""
        prepared = prepare_training(small_dataset.series, naive_config)

        assert len(prepared.stats) == 4
        assert len(prepared.segments) == 4 * 7
        assert prepared.segments.n == 24
        assert prepared.segments.values.min() >= 0.0
        assert prepared.segments.values.max() <= 1.0

    def test_variant_channels(self, small_dataset, naive_config):
        """Test that the variant decides the predictor inputs"""
        config = naive_config.with_overrides(variant=FeatureVariant.ALL)

        prepared = prepare_training(small_dataset.series, config)

        assert prepared.feature_config.feature_count == 9
        assert prepared.series[0].channels[0] == "dl_volume"

    def test_seen_cell_peak_flags_match_serving(self, naive_config):
        """Test that a training cell's peak channel is the same in training and serving"""
        dataset = generate(SyntheticSpec(cells=2, weeks=2, seed=4, regime_switches={0: [(1, 2)]}))
        config = naive_config.with_overrides(variant=FeatureVariant.PEAK)
        prepared = prepare_training(dataset.series, config)
        raw = dataset.series[0]

        served = prepare_stream(raw, prepared.feature_config, prepared.stats[(raw.cell_id, raw.part)])
        whole_series = engineer_peak_features(normalize(raw)[0])

        trained = prepared.series[0].channel(PEAK_FLAG)
        np.testing.assert_array_equal(trained, served.channel(PEAK_FLAG))
        assert not np.array_equal(trained, whole_series.channel(PEAK_FLAG))

    def test_no_series(self, naive_config):
        """Test that training needs at least one series"""
        with pytest.raises(SeriesError, match="No training series"):
            prepare_training([], naive_config)


class TestFitFramework:
    """Test cases for clustering plus per-cluster training"""

    def test_fit_and_serve_holdout(self, small_dataset, naive_config):
        """Test a holdout run never sees the held-out cell"""
        train, held = holdout_split(small_dataset.series, "cell_003")

        framework = fit_framework(train, naive_config)
        trace = predict_stream(framework, held)
        report = evaluate(trace, "uni")

        assert framework.cluster_model.k == 2
        assert sorted(framework.models) == [0, 1]
        assert "cell_003" not in set().union(*training_cells(framework).values())
        assert_no_leakage(framework, "cell_003")
        assert np.isfinite(report.weighted_mae)
        assert report.excluded_steps > 0

    def test_leakage_detected(self, small_dataset, naive_config):
        """Test that training on the held-out cell is reported"""
        framework = fit_framework(small_dataset.series, naive_config)

        with pytest.raises(LeakageError, match="cell_000"):
            assert_no_leakage(framework, "cell_000")

    def test_reuse_cluster_model(self, small_dataset, naive_config):
        """Test sharing one clustering across feature variants"""
        first = fit_framework(small_dataset.series, naive_config)
        config = naive_config.with_overrides(variant=FeatureVariant.PEAK)

        second = fit_framework(small_dataset.series, config, cluster_model=first.cluster_model)

        assert second.cluster_model is first.cluster_model
        assert second.feature_config.variant is FeatureVariant.PEAK

    def test_mismatched_cluster_model(self, small_dataset, naive_config):
        """Test that a clustering of other segments is refused"""
        first = fit_framework(small_dataset.series[:2], naive_config)

        with pytest.raises(SeriesError, match="different segments"):
            fit_framework(small_dataset.series, naive_config, cluster_model=first.cluster_model)
