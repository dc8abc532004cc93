"""
Cluster, train, adapt: the end-to-end framework over a set of training cells
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import Any

from .adaptive.engine import AssignmentTrace, OodPolicy, run_stream
from .clustering.dtw import DtwParams
from .clustering.kmeans import ClusterModel, fit
from .config import (
    HOURS_PER_WEEK,
    PEARSON_THRESHOLD,
    RAN_CHANNEL_COUNT,
    AssignMode,
    FeatureVariant,
    PredictorKind,
)
from .errors import LeakageError, SeriesError
from .predictors.base import PredictorSpec, TrainingProtocol
from .predictors.training import PerClusterTraining, train_per_cluster
from .timeseries.core import (
    NormalizationStats,
    SeasonalityConfig,
    SegmentSet,
    TimeSeries,
    consolidate,
    normalize,
    segmentize,
)
from .timeseries.features import FeatureConfig, apply_feature_config, resolve_feature_config

logger = logging.getLogger(__name__)

# The first week of a training cell fixes its peak hours, in training and serving alike
PEAK_REFERENCE_HOURS = HOURS_PER_WEEK


@dataclass(frozen=True)
class FrameworkConfig:
    """Everything one cluster-train-adapt run needs besides the data"""

    seasonality: SeasonalityConfig = field(default_factory=SeasonalityConfig)
    dtw: DtwParams = field(default_factory=DtwParams)
    k: int = 4
    variant: FeatureVariant = FeatureVariant.UNI
    kind: PredictorKind = PredictorKind.LSTM
    hidden_size: int = 48
    protocol: TrainingProtocol = field(default_factory=TrainingProtocol)
    kmeans_max_iter: int = 100
    dba_max_iter: int = 30
    dba_tol: float = 1e-5
    pearson_threshold: float = PEARSON_THRESHOLD
    ran_size: int = RAN_CHANNEL_COUNT
    seed: int = 0
    workers: int = 1

    def with_overrides(self, **changes: Any) -> "FrameworkConfig":
        return replace(self, **changes)


@dataclass
class PreparedTraining:
    """Normalized training series with features applied, and their segments"""

    series: list[TimeSeries]
    stats: dict[tuple[str, int], NormalizationStats]
    feature_config: FeatureConfig
    segments: SegmentSet


@dataclass
class FittedFramework:
    """A clustering and one predictor per cluster"""

    config: FrameworkConfig
    prepared: PreparedTraining
    cluster_model: ClusterModel
    training: PerClusterTraining
    spec: PredictorSpec

    @property
    def feature_config(self) -> FeatureConfig:
        return self.prepared.feature_config

    @property
    def segments(self) -> SegmentSet:
        return self.prepared.segments

    @property
    def models(self):
        return self.training.models


def prepare_training(
    series_set: Sequence[TimeSeries], config: FrameworkConfig
) -> PreparedTraining:
    """
    Normalize each training series on its own range, resolve the feature
    configuration on the pooled normalized data, and cut segments

    Raises:
        SeriesError: No series, or no series long enough for one segment
    """
    if not series_set:
        raise SeriesError("No training series")
    normalized = []
    stats = {}
    for series in series_set:
        scaled, series_stats = normalize(series)
        normalized.append(scaled)
        stats[(series.cell_id, series.part)] = series_stats

    feature_config = resolve_feature_config(
        config.variant, normalized, config.pearson_threshold, config.ran_size
    )
    prepared = [
        apply_feature_config(s, feature_config, PEAK_REFERENCE_HOURS) for s in normalized
    ]
    segments = consolidate(segmentize(s, config.seasonality) for s in prepared)
    if len(segments) == 0:
        raise SeriesError(f"No training series is at least n={config.seasonality.n} long")
    logger.info(
        f"Prepared {len(prepared)} series, {len(segments)} segments, "
        f"channels {list(feature_config.selected_channels)}"
    )
    return PreparedTraining(prepared, stats, feature_config, segments)


def cluster_segments(segments: SegmentSet, config: FrameworkConfig) -> ClusterModel:
    return fit(
        segments,
        config.k,
        config.dtw,
        max_iter=config.kmeans_max_iter,
        seed=config.seed,
        dba_max_iter=config.dba_max_iter,
        dba_tol=config.dba_tol,
        workers=config.workers,
    )


def predictor_spec(config: FrameworkConfig, feature_config: FeatureConfig) -> PredictorSpec:
    return PredictorSpec(
        kind=config.kind,
        feature_config=feature_config,
        window=config.seasonality.n,
        horizon=config.seasonality.m,
        hidden_size=config.hidden_size,
        seed=config.seed,
    )


def fit_framework(
    series_set: Sequence[TimeSeries],
    config: FrameworkConfig,
    cluster_model: ClusterModel | None = None,
    prepared: PreparedTraining | None = None,
) -> FittedFramework:
    """
    Cluster the training segments and train one predictor per cluster

    Args:
        series_set: Raw training series
        config: Run configuration
        cluster_model: Reuse a clustering of the same segments (clustering
            only reads the output channel, so it is shared across variants)
        prepared: Reuse an earlier preparation of the same series
    """
    prepared = prepared or prepare_training(series_set, config)
    if cluster_model is None:
        cluster_model = cluster_segments(prepared.segments, config)
    elif len(cluster_model.assignments) != len(prepared.segments):
        raise SeriesError("Cluster model was fitted on different segments")
    spec = predictor_spec(config, prepared.feature_config)
    training = train_per_cluster(
        cluster_model, prepared.segments, prepared.series, spec, config.protocol, config.workers
    )
    return FittedFramework(config, prepared, cluster_model, training, spec)


def prepare_stream(
    stream: TimeSeries,
    feature_config: FeatureConfig,
    stats: NormalizationStats | None = None,
    peak_reference_length: int | None = PEAK_REFERENCE_HOURS,
) -> TimeSeries:
    """
    Attach engineered channels to a stream before serving it

    Unseen streams (no ``stats``) need nothing: the engine derives every
    engineered channel causally. Streams of training cells get their flags
    and handover channels from the training reference.
    """
    if stats is None:
        return stream
    return apply_feature_config(stream, feature_config, peak_reference_length, stats)


def predict_stream(
    framework: FittedFramework,
    stream: TimeSeries,
    cadence: int = 1,
    ood: OodPolicy | None = None,
    assign_mode: AssignMode = AssignMode.TRAILING,
    stats: NormalizationStats | None = None,
    with_truth: bool = True,
) -> AssignmentTrace:
    """Serve a raw stream with the framework's clusters and predictors"""
    prepared = prepare_stream(stream, framework.feature_config, stats)
    return run_stream(
        framework.cluster_model,
        framework.models,
        prepared,
        cadence=cadence,
        ood=ood,
        stats=stats,
        assign_mode=assign_mode,
        params=framework.config.dtw,
        with_truth=with_truth,
    )


def training_cells(framework: FittedFramework) -> dict[str, set[str]]:
    """Cells that reached each training structure"""
    windows = framework.training.windows
    return {
        "series": {s.cell_id for s in framework.prepared.series},
        "stats": {cell for cell, _ in framework.prepared.stats},
        "segments": framework.segments.cells,
        "windows": windows.cells if windows is not None else set(),
    }


def assert_no_leakage(framework: FittedFramework, holdout_cell: str) -> None:
    """
    Audit the provenance of every training structure

    Raises:
        LeakageError: The held-out cell reached clustering or training
    """
    for structure, cells in training_cells(framework).items():
        if holdout_cell in cells:
            raise LeakageError(f"Held-out cell {holdout_cell} found in training {structure}")
