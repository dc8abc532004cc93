"""
Tests for the LSTM and seasonal-naive predictor families
"""

import itertools

import numpy as np
import pytest

from adaptcast.config import OUTPUT_CHANNEL, FeatureVariant, PredictorKind
from adaptcast.errors import GradientCheckError, PredictorError
from adaptcast.predictors import (
    LSTMPredictor,
    PredictorModel,
    PredictorRegistry,
    PredictorSpec,
    SeasonalNaivePredictor,
    forward,
    gradient_check,
    lstm_parameter_count,
    predict_batch,
)
from adaptcast.timeseries import FeatureConfig


def feature_config(f: int) -> FeatureConfig:
    channels = (OUTPUT_CHANNEL, *(f"ch{i}" for i in range(1, f)))
    return FeatureConfig(FeatureVariant.RAN if f > 1 else FeatureVariant.UNI, channels)


def lstm_spec(f=1, h=4, n=6, seed=0) -> PredictorSpec:
    return PredictorSpec(PredictorKind.LSTM, feature_config(f), window=n, hidden_size=h, seed=seed)


class TestLSTMPredictor:
    """Test cases for the LSTM forecaster"""

    @pytest.mark.parametrize("f,h", [(1, 1), (1, 48), (9, 48), (5, 16)])
    def test_parameter_count(self, f, h):
        """Test 4h(f+h) + 4h + h + 1 parameters"""
        predictor = PredictorRegistry.get(lstm_spec(f, h))

        assert predictor.parameter_count() == 4 * h * (f + h) + 5 * h + 1
        assert predictor.parameter_count() == lstm_parameter_count(f, h)

    def test_initialization(self):
        """Test uniform weights within 1/sqrt(f+h) and zero biases"""
        predictor = PredictorRegistry.get(lstm_spec(f=3, h=4))
        theta = predictor.init_parameters(np.random.default_rng(0))
        parts = predictor.unpack(theta)

        assert np.abs(parts.W).max() <= 1 / np.sqrt(7)
        np.testing.assert_array_equal(parts.b, 0.0)
        assert parts.c == 0.0

    def test_zero_parameters_predict_zero(self):
        """Test that the all-zero network outputs exactly zero"""
        predictor = PredictorRegistry.get(lstm_spec())
        inputs = np.random.default_rng(1).random((5, 6, 1))

        np.testing.assert_array_equal(predictor.predict(np.zeros(predictor.parameter_count()), inputs), 0.0)

    def test_input_shape_checked(self):
        """Test that windows must match (window, features)"""
        predictor = PredictorRegistry.get(lstm_spec(n=6))

        with pytest.raises(PredictorError, match="does not match"):
            predictor.check_inputs(np.zeros((2, 5, 1)))

    @pytest.mark.parametrize("h,f,n", list(itertools.product([1, 2, 4], [1, 3], [3, 6])))
    def test_gradient_matches_finite_differences(self, h, f, n):
        """Test BPTT gradients against central differences"""
        spec = lstm_spec(f=f, h=h, n=n, seed=h * 100 + f * 10 + n)
        inputs = np.random.default_rng(n).random((n, f))

        # The initial prediction is bounded by h / sqrt(f+h); 5.0 is far from the kink
        result = gradient_check(spec, inputs, target=5.0)

        assert result.max_relative_error < 1e-3

    def test_gradient_check_refuses_the_kink(self):
        """Test that a target at the prediction is rejected"""
        spec = lstm_spec()
        zeros = np.zeros(PredictorRegistry.get(spec).parameter_count())

        with pytest.raises(GradientCheckError, match="kink"):
            gradient_check(spec, np.ones((6, 1)), target=0.0, parameters=zeros)

    def test_zero_residual_has_zero_gradient(self):
        """Test the zero subgradient at a perfect prediction"""
        predictor = PredictorRegistry.get(lstm_spec())
        zeros = np.zeros(predictor.parameter_count())

        loss, gradient = predictor.loss_and_gradient(zeros, np.ones((1, 6, 1)), np.zeros(1))

        assert loss == 0.0
        np.testing.assert_array_equal(gradient, 0.0)


class TestSeasonalNaive:
    """Test cases for the seasonal-naive baseline"""

    def test_repeats_value_one_season_back(self, uni_config):
        """Test that horizon 1 returns the first window value"""
        spec = PredictorSpec(PredictorKind.SEASONAL_NAIVE, uni_config, window=4)
        inputs = np.arange(8.0).reshape(2, 4, 1)

        np.testing.assert_array_equal(predict_batch(PredictorModel(spec, []), inputs), [0.0, 4.0])

    def test_longer_horizon(self, uni_config):
        """Test that horizon m reads window position m - 1"""
        spec = PredictorSpec(PredictorKind.SEASONAL_NAIVE, uni_config, window=4, horizon=3)

        assert forward(PredictorModel(spec, []), np.arange(4.0)[:, None]) == 2.0

    def test_horizon_beyond_window(self, uni_config):
        """Test that the season must cover the horizon"""
        spec = PredictorSpec(PredictorKind.SEASONAL_NAIVE, uni_config, window=2, horizon=3)

        with pytest.raises(PredictorError, match="horizon <= window"):
            PredictorRegistry.get(spec)

    def test_not_trainable(self, uni_config):
        """Test that the baseline has no gradient"""
        spec = PredictorSpec(PredictorKind.SEASONAL_NAIVE, uni_config, window=4)
        predictor = PredictorRegistry.get(spec)

        assert isinstance(predictor, SeasonalNaivePredictor)
        with pytest.raises(PredictorError, match="no trainable"):
            predictor.loss_and_gradient(np.zeros(0), np.zeros((1, 4, 1)), np.zeros(1))


class TestPredictorModel:
    """Test cases for trained model records"""

    def test_registry_lists_both_families(self):
        """Test self-registration on import"""
        assert set(PredictorRegistry.list_kinds()) >= {"lstm", "seasonal_naive"}
        assert isinstance(PredictorRegistry.get(lstm_spec()), LSTMPredictor)

    def test_parameter_length_checked(self):
        """Test that the parameter vector must fit the architecture"""
        with pytest.raises(PredictorError, match="parameters"):
            PredictorModel(lstm_spec(), np.zeros(3))

    def test_non_finite_parameters_rejected(self):
        """Test that NaN parameters are rejected"""
        count = lstm_parameter_count(1, 4)

        with pytest.raises(PredictorError, match="finite"):
            PredictorModel(lstm_spec(), np.full(count, np.nan))

    def test_dict_round_trip(self):
        """Test model serialization keeps parameters and history"""
        spec = lstm_spec()
        theta = PredictorRegistry.get(spec).init_parameters(np.random.default_rng(2))
        model = PredictorModel(spec, theta, ((0.5, 0.4, 0.1),), cluster_id=3, best_epoch=1)

        loaded = PredictorModel.from_dict(model.to_dict())

        np.testing.assert_array_equal(loaded.parameters, model.parameters)
        assert loaded.spec == spec
        assert loaded.cluster_id == 3
        assert loaded.best_val_loss == 0.4
