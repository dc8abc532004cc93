"""
Time-series domain types, preprocessing and feature engineering
"""

from .core import (
    IngestResult,
    NormalizationStats,
    SeasonalityConfig,
    Segment,
    Segmentation,
    SegmentSet,
    TimeSeries,
    consolidate,
    ingest_csv,
    normalize,
    segmentize,
    split_train_test,
)
from .features import (
    FeatureConfig,
    apply_feature_config,
    attach_handover_features,
    engineer_peak_features,
    pearson_correlation,
    pearson_select,
    resolve_feature_config,
)

__all__ = [
    "IngestResult",
    "NormalizationStats",
    "SeasonalityConfig",
    "Segment",
    "Segmentation",
    "SegmentSet",
    "TimeSeries",
    "consolidate",
    "ingest_csv",
    "normalize",
    "segmentize",
    "split_train_test",
    "FeatureConfig",
    "apply_feature_config",
    "attach_handover_features",
    "engineer_peak_features",
    "pearson_correlation",
    "pearson_select",
    "resolve_feature_config",
]
