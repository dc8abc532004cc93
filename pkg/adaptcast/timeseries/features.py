"""
Feature engineering and the five input feature configurations
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..config import (
    HANDOVER_IN_FEATURE,
    HANDOVER_INCOMING,
    HANDOVER_OUT_FEATURE,
    HANDOVER_OUTGOING,
    PEAK_FLAG,
    PEARSON_THRESHOLD,
    RAN_CHANNEL_COUNT,
    WEEKEND_FLAG,
    FeatureVariant,
)
from ..errors import SeriesError
from .core import NormalizationStats, TimeSeries

logger = logging.getLogger(__name__)

ENGINEERED_CHANNELS = frozenset(
    {PEAK_FLAG, WEEKEND_FLAG, HANDOVER_IN_FEATURE, HANDOVER_OUT_FEATURE}
)


@dataclass(frozen=True)
class FeatureConfig:
    """Resolved model input channels; the output channel always comes first"""

    variant: FeatureVariant
    selected_channels: tuple[str, ...]
    engineered_flags: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.selected_channels:
            raise SeriesError("A feature configuration needs at least one channel")
        if len(set(self.selected_channels)) != len(self.selected_channels):
            raise SeriesError(f"Duplicate channels in {self.selected_channels}")

    @property
    def output_channel(self) -> str:
        return self.selected_channels[0]

    @property
    def feature_count(self) -> int:
        return len(self.selected_channels)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "selected_channels": list(self.selected_channels),
            "engineered_flags": list(self.engineered_flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureConfig":
        return cls(
            FeatureVariant(data["variant"]),
            tuple(data["selected_channels"]),
            tuple(data.get("engineered_flags", ())),
        )


def pearson_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson coefficient; 0.0 when either side has zero variance"""
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    denominator = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if denominator == 0:
        return 0.0
    return float(np.dot(a, b) / denominator)


def pearson_select(
    series_set: Sequence[TimeSeries],
    threshold: float = PEARSON_THRESHOLD,
    *,
    target_size: int | None = None,
    exclude: Sequence[str] = (),
) -> list[str]:
    """
    Select channels strongly correlated with the output channel

    Correlations are computed over the pooled samples of every series.

    Args:
        series_set: Training series sharing their channel names
        threshold: Selection requires a signed correlation above this value
        target_size: If set, cap or pad the result to this many channels
            (output included) using the strongest correlations
        exclude: Channels never considered

    Returns:
        Channel names, output channel first, then by decreasing correlation
    """
    if not series_set:
        raise SeriesError("pearson_select needs at least one series")
    if not 0 < threshold < 1:
        raise SeriesError(f"Correlation threshold must be in (0, 1), got {threshold}")

    output = series_set[0].output_channel
    shared = set(series_set[0].channels)
    for series in series_set[1:]:
        shared &= set(series.channels)
    candidates = sorted(
        c
        for c in shared
        if c != output and c not in exclude and c not in ENGINEERED_CHANNELS
    )

    pooled_output = np.concatenate([s.output for s in series_set])
    if len(pooled_output) < 2:
        raise SeriesError("pearson_select needs at least 2 samples per channel")

    correlations: dict[str, float] = {}
    for channel in candidates:
        pooled = np.concatenate([s.channel(channel) for s in series_set])
        if np.ptp(pooled) == 0:
            logger.warning(f"Channel '{channel}' has zero variance; excluded")
            continue
        correlations[channel] = pearson_correlation(pooled, pooled_output)

    ranked = sorted(correlations, key=lambda c: (-correlations[c], c))
    selected = [c for c in ranked if correlations[c] > threshold]

    if target_size is not None:
        extras = max(target_size - 1, 0)
        if len(selected) < extras:
            padding = [c for c in ranked if c not in selected][: extras - len(selected)]
            if padding:
                logger.warning(
                    f"Only {len(selected)} channels pass r > {threshold}; "
                    f"padding with {padding}"
                )
            selected += padding
        selected = selected[:extras]

    logger.debug(f"Pearson selection: {[(c, correlations[c]) for c in selected]}")
    return [output, *selected]


def engineer_peak_features(
    series: TimeSeries, reference_length: int | None = None
) -> TimeSeries:
    """
    Append the peak-hour and weekend binary channels

    An hour of day is a peak hour when the cell's mean output over the
    reference prefix at that hour is at least the overall reference mean.
    Ties count as peak, so a constant cell is peak at every hour.

    Args:
        series: Series with an absolute start time
        reference_length: Prefix length used for the hourly means
            (default: the whole series, i.e. its training split)
    """
    length = len(series)
    reference_length = length if reference_length is None else min(reference_length, length)
    hours = (series.start_time.hour + np.arange(length)) % 24

    reference = series.output[:reference_length]
    reference_hours = hours[:reference_length]
    overall = reference.mean()
    peak_hours = np.zeros(24, dtype=float)
    for hour in range(24):
        at_hour = reference[reference_hours == hour]
        # Mean over identical values may differ from the overall mean in the last ulp
        if len(at_hour) and at_hour.mean() >= overall - 1e-12:
            peak_hours[hour] = 1.0

    weekend = (series.timestamps.dayofweek >= 5).astype(float)
    return series.with_channels({PEAK_FLAG: peak_hours[hours], WEEKEND_FLAG: weekend})


def attach_handover_features(
    series: TimeSeries,
    incoming: str = HANDOVER_INCOMING,
    outgoing: str = HANDOVER_OUTGOING,
    stats: NormalizationStats | None = None,
) -> TimeSeries:
    """Append min-max normalized incoming/outgoing handover channels"""
    for role, name in (("incoming", incoming), ("outgoing", outgoing)):
        if name not in series.features:
            raise SeriesError(f"{role} handover channel absent: '{name}'")

    appended = {}
    for name, target in ((incoming, HANDOVER_IN_FEATURE), (outgoing, HANDOVER_OUT_FEATURE)):
        values = series.channel(name)
        if stats is not None and name in stats.ranges:
            appended[target] = stats.scale(name, values)
        else:
            lo, hi = float(values.min()), float(values.max())
            appended[target] = NormalizationStats({name: (lo, hi)}).scale(name, values)
    return series.with_channels(appended)


def resolve_feature_config(
    variant: FeatureVariant,
    series_set: Sequence[TimeSeries],
    threshold: float = PEARSON_THRESHOLD,
    ran_size: int = RAN_CHANNEL_COUNT,
) -> FeatureConfig:
    """
    Resolve a feature variant against the training series

    Channel counts: uni=1, ran=ran_size, peak=3, handover=3, and all is the
    union of the others (9 with the default ran_size).
    """
    if not series_set:
        raise SeriesError("Cannot resolve a feature configuration without series")
    output = series_set[0].output_channel
    peak = [PEAK_FLAG, WEEKEND_FLAG]
    handover = [HANDOVER_IN_FEATURE, HANDOVER_OUT_FEATURE]

    def ran_channels() -> list[str]:
        return pearson_select(
            series_set,
            threshold,
            target_size=ran_size,
            exclude=(HANDOVER_INCOMING, HANDOVER_OUTGOING),
        )

    if variant is FeatureVariant.UNI:
        return FeatureConfig(variant, (output,))
    if variant is FeatureVariant.RAN:
        return FeatureConfig(variant, tuple(ran_channels()))
    if variant is FeatureVariant.PEAK:
        return FeatureConfig(variant, (output, *peak), tuple(peak))
    if variant is FeatureVariant.HANDOVER:
        return FeatureConfig(variant, (output, *handover), tuple(handover))

    channels = list(dict.fromkeys([*ran_channels(), *peak, *handover]))
    return FeatureConfig(variant, tuple(channels), tuple(peak + handover))


def apply_feature_config(
    series: TimeSeries,
    config: FeatureConfig,
    peak_reference_length: int | None = None,
    handover_stats: NormalizationStats | None = None,
) -> TimeSeries:
    """Append the engineered channels a configuration needs and check the rest"""
    selected = set(config.selected_channels)
    if selected & {PEAK_FLAG, WEEKEND_FLAG}:
        series = engineer_peak_features(series, peak_reference_length)
    if selected & {HANDOVER_IN_FEATURE, HANDOVER_OUT_FEATURE}:
        series = attach_handover_features(series, stats=handover_stats)
    missing = [c for c in config.selected_channels if c not in series.features]
    if missing:
        raise SeriesError(
            f"Series {series.cell_id} lacks channels {missing} for {config.variant.value}"
        )
    return series
