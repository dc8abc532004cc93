"""
Pytest configuration and shared fixtures
"""

from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
import pytest

from adaptcast.clustering import Barycenter, ClusterModel, DtwParams
from adaptcast.config import OUTPUT_CHANNEL, FeatureVariant, PredictorKind
from adaptcast.predictors import PredictorModel, PredictorSpec
from adaptcast.synth import SyntheticDataset, SyntheticSpec, generate
from adaptcast.timeseries import FeatureConfig, NormalizationStats, TimeSeries


@pytest.fixture
def uni_config() -> FeatureConfig:
    """Univariate feature configuration on the output channel"""
    return FeatureConfig(FeatureVariant.UNI, (OUTPUT_CHANNEL,))


@pytest.fixture
def make_series() -> Callable[..., TimeSeries]:
    """Factory for hourly series starting on a Monday midnight"""

    def factory(
        values: Sequence[float],
        cell_id: str = "cell_a",
        start: str = "2024-01-01 00:00",
        **channels: Sequence[float],
    ) -> TimeSeries:
        features: dict[str, Any] = {OUTPUT_CHANNEL: np.asarray(values, dtype=float)}
        features.update({k: np.asarray(v, dtype=float) for k, v in channels.items()})
        return TimeSeries(cell_id, start, features)

    return factory


@pytest.fixture
def make_cluster_model() -> Callable[..., ClusterModel]:
    """Factory for a clustering with given centroids, one member each"""

    def factory(centroids: Sequence[Sequence[float]], params: DtwParams | None = None) -> ClusterModel:
        return ClusterModel(
            k=len(centroids),
            n=len(centroids[0]),
            centroids=tuple(Barycenter(np.asarray(c, dtype=float), 0.0, 0) for c in centroids),
            assignments=np.arange(len(centroids)),
            inertia=0.0,
            seed=0,
            iterations_run=0,
            dtw_params=params or DtwParams(),
        )

    return factory


@pytest.fixture
def naive_models(uni_config: FeatureConfig) -> Callable[[int, int], dict[int, PredictorModel]]:
    """Seasonal-naive model for each of k clusters with window n"""

    def factory(k: int, n: int, horizon: int = 1) -> dict[int, PredictorModel]:
        spec = PredictorSpec(PredictorKind.SEASONAL_NAIVE, uni_config, window=n, horizon=horizon)
        return {c: PredictorModel(spec, np.zeros(0), cluster_id=c) for c in range(k)}

    return factory


@pytest.fixture
def identity_stats() -> NormalizationStats:
    """Stats that leave output values in [0, 1] unchanged"""
    return NormalizationStats({OUTPUT_CHANNEL: (0.0, 1.0)})


@pytest.fixture(scope="session")
def small_dataset() -> SyntheticDataset:
    """Four cells, one per default profile, one week each"""
    return generate(SyntheticSpec(cells=4, weeks=1, seed=3))
