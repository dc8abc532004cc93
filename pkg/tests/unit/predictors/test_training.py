"""
Tests for windowing, the SGD training loop and per-cluster training
"""

import numpy as np
import pytest

from adaptcast.clustering import Barycenter, ClusterModel, DtwParams
from adaptcast.config import PredictorKind
from adaptcast.errors import PredictorError, TrainingDivergenceError
from adaptcast.predictors import (
    PredictorSpec,
    TrainingProtocol,
    WindowSet,
    attribute_windows,
    make_windows,
    split_windows,
    train,
    train_per_cluster,
)
from adaptcast.timeseries import SeasonalityConfig, consolidate, segmentize


@pytest.fixture
def tiny_protocol() -> TrainingProtocol:
    return TrainingProtocol(epochs=30, lr0=0.05, momentum=0.5, batch_size=16)


def constant_windows(count: int, value: float, n: int = 4) -> WindowSet:
    rng = np.random.default_rng(count)
    return WindowSet(
        inputs=rng.random((count, n, 1)),
        targets=np.full(count, value),
        cell_ids=("c",) * count,
        parts=np.zeros(count, dtype=int),
        target_index=np.arange(count) + n,
    )


def day_assignment_model(labels: list[int], n: int) -> ClusterModel:
    k = max(labels) + 1
    return ClusterModel(
        k=k,
        n=n,
        centroids=tuple(Barycenter(np.zeros(n), 0.0, 0) for _ in range(k)),
        assignments=np.array(labels),
        inertia=0.0,
        seed=0,
        iterations_run=0,
        dtw_params=DtwParams(),
    )


class TestWindows:
    """Test cases for sliding windows"""

    def test_count_and_targets(self, make_series, uni_config):
        """Test L - n - m + 1 windows targeting start + n + m - 1"""
        windows = make_windows(make_series(np.arange(10.0)), uni_config, n=4, m=2)

        assert len(windows) == 5
        np.testing.assert_array_equal(windows.inputs[0, :, 0], [0, 1, 2, 3])
        np.testing.assert_array_equal(windows.targets, [5, 6, 7, 8, 9])
        assert windows.provenance[0] == ("cell_a", 0, 5)

    def test_short_series_gives_no_windows(self, make_series, uni_config):
        """Test that a series shorter than n + m yields nothing"""
        assert len(make_windows(make_series(np.arange(4.0)), uni_config, n=4)) == 0

    def test_split_sizes(self):
        """Test the validation share and disjointness"""
        windows = constant_windows(100, 1.0)
        train_part, val_part = split_windows(windows, 0.15, seed=0)

        assert (len(train_part), len(val_part)) == (85, 15)
        assert not set(train_part.target_index) & set(val_part.target_index)

    def test_split_needs_two(self):
        """Test that one window cannot be split"""
        with pytest.raises(PredictorError, match="at least 2"):
            split_windows(constant_windows(1, 1.0), 0.15)


class TestTrain:
    """Test cases for the SGD training loop"""

    def test_learns_a_constant(self, uni_config, tiny_protocol):
        """Test that training reaches a constant target"""
        spec = PredictorSpec(PredictorKind.LSTM, uni_config, window=4, hidden_size=2)

        model = train(spec, tiny_protocol, constant_windows(96, 3.0), constant_windows(16, 3.0))

        assert model.best_val_loss < 0.75
        assert 1 <= model.best_epoch <= len(model.train_history)

    def test_seeded_training_is_deterministic(self, uni_config, tiny_protocol):
        """Test that equal seeds give equal parameters"""
        spec = PredictorSpec(PredictorKind.LSTM, uni_config, window=4, hidden_size=2, seed=4)
        data = constant_windows(40, 0.5), constant_windows(8, 0.5)

        first = train(spec, tiny_protocol, *data)
        second = train(spec, tiny_protocol, *data)

        np.testing.assert_array_equal(first.parameters, second.parameters)

    def test_divergence_is_reported(self, uni_config):
        """Test that non-finite losses stop training"""
        spec = PredictorSpec(PredictorKind.LSTM, uni_config, window=4, hidden_size=2)
        protocol = TrainingProtocol(epochs=5, lr0=float("inf"), batch_size=8)

        with pytest.raises(TrainingDivergenceError) as excinfo:
            train(spec, protocol, constant_windows(32, 1.0), constant_windows(8, 1.0))

        assert excinfo.value.epoch == 1

    def test_empty_validation(self, uni_config, tiny_protocol):
        """Test that both splits must be nonempty"""
        spec = PredictorSpec(PredictorKind.LSTM, uni_config, window=4, hidden_size=2)

        with pytest.raises(PredictorError, match="nonempty"):
            train(spec, tiny_protocol, constant_windows(8, 1.0), WindowSet.empty(4, 1))

    @pytest.mark.parametrize(
        "kwargs",
        [{"epochs": 0}, {"loss": "mse"}, {"momentum": 1.0}, {"plateau_factor": 1.0}],
    )
    def test_protocol_validation(self, kwargs):
        """Test protocol bounds"""
        with pytest.raises(PredictorError):
            TrainingProtocol(**kwargs)


class TestPerClusterTraining:
    """Test cases for cluster-specific training"""

    @pytest.fixture
    def five_days(self, make_series):
        values = np.tile(np.sin(np.linspace(0, 2 * np.pi, 24, endpoint=False)), 5)
        series = make_series(values)
        segments = consolidate([segmentize(series, SeasonalityConfig(n=24))])
        return series, segments

    def test_windows_follow_target_day(self, five_days, uni_config):
        """Test that each window goes to the cluster of its target's day"""
        series, segments = five_days
        model = day_assignment_model([0, 1, 0, 1, 1], 24)
        windows = make_windows(series, uni_config, n=24)

        labels = attribute_windows(model, segments, windows)

        expected = np.array([0, 1, 0, 1, 1])[windows.target_index // 24]
        np.testing.assert_array_equal(labels, expected)

    def test_small_cluster_falls_back(self, five_days, uni_config, caplog):
        """Test that a cluster below batch_size uses the global model"""
        series, segments = five_days
        model = day_assignment_model([0, 0, 0, 0, 1], 24)
        spec = PredictorSpec(PredictorKind.LSTM, uni_config, window=24, hidden_size=2)
        protocol = TrainingProtocol(epochs=2, batch_size=32)

        result = train_per_cluster(model, segments, [series], spec, protocol)

        assert result.window_counts == {0: 72, 1: 24}
        assert result.fallback_clusters == [1]
        assert result.models[1] is result.global_model
        assert result.models[0].cluster_id == 0
        assert "falling back" in caplog.text

    def test_all_clusters_degenerate(self, five_days, uni_config):
        """Test that training fails when no cluster has enough windows"""
        series, segments = five_days
        model = day_assignment_model([0, 0, 0, 0, 1], 24)
        spec = PredictorSpec(PredictorKind.LSTM, uni_config, window=24, hidden_size=2)

        with pytest.raises(PredictorError, match="All 2 clusters"):
            train_per_cluster(model, segments, [series], spec, TrainingProtocol(batch_size=500))

    def test_naive_models_for_every_cluster(self, five_days, uni_config):
        """Test that the untrained baseline serves every cluster"""
        series, segments = five_days
        model = day_assignment_model([0, 1, 2, 0, 1], 24)
        spec = PredictorSpec(PredictorKind.SEASONAL_NAIVE, uni_config, window=24)

        result = train_per_cluster(model, segments, [series], spec, TrainingProtocol())

        assert sorted(result.models) == [0, 1, 2]
        assert result.fallback_clusters == []
