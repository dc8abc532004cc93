"""
Adaptive cluster assignment over unseen streams and the OOD feedback loop

At every step the engine scores a length-n window of the stream against the
cluster centroids, dispatches the forecast to the model of the nearest
cluster, and records both. Windows too far from every centroid are buffered
as out-of-distribution segments; ``ood_recluster`` turns the buffer into a
new cluster.
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..clustering.dba import Barycenter, dba_average
from ..clustering.dtw import DtwParams, dtw_to_many
from ..clustering.kmeans import ClusterModel, fit, predict_cluster, self_distances
from ..config import (
    BINARY_CHANNELS,
    HANDOVER_IN_FEATURE,
    HANDOVER_INCOMING,
    HANDOVER_OUT_FEATURE,
    HANDOVER_OUTGOING,
    PEAK_FLAG,
    WEEKEND_FLAG,
    AssignMode,
)
from ..errors import AssignmentError, ClusteringError, OodError
from ..predictors.base import PredictorModel, predict_batch
from ..timeseries.core import NormalizationStats, SegmentSet, TimeSeries

logger = logging.getLogger(__name__)

_RAW_SOURCES = {
    HANDOVER_IN_FEATURE: HANDOVER_INCOMING,
    HANDOVER_OUT_FEATURE: HANDOVER_OUTGOING,
}


@dataclass(frozen=True)
class OodPolicy:
    """When a window counts as out-of-distribution and when to recluster"""

    threshold: float
    quantile_source: str = "p99_self_distance"
    buffer_min_segments: int = 1

    def __post_init__(self):
        if not self.threshold > 0:
            raise OodError(f"OOD threshold must be positive, got {self.threshold}")
        if self.buffer_min_segments < 1:
            raise OodError(
                f"buffer_min_segments must be >= 1, got {self.buffer_min_segments}"
            )

    @classmethod
    def from_training(
        cls,
        cluster_model: ClusterModel,
        segments: SegmentSet | np.ndarray,
        quantile: float = 0.99,
        buffer_min_segments: int = 1,
    ) -> "OodPolicy":
        """Threshold at a quantile of the training segments' distance to their own centroid"""
        if not 0 < quantile <= 1:
            raise OodError(f"quantile must be in (0, 1], got {quantile}")
        distances = self_distances(cluster_model, segments)
        threshold = max(float(np.quantile(distances, quantile)), 1e-9)
        logger.debug(f"OOD threshold {threshold:.4g} (q={quantile:g} of self-distances)")
        return cls(threshold, f"p{quantile * 100:g}_self_distance", buffer_min_segments)

    def to_dict(self) -> dict[str, Any]:
        return {
            "threshold": self.threshold,
            "quantile_source": self.quantile_source,
            "buffer_min_segments": self.buffer_min_segments,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "OodPolicy":
        return cls(**data)


@dataclass(frozen=True)
class StepRecord:
    """What happened at one forecast step"""

    step: int
    scores: tuple[float, ...]
    cluster: int
    prediction: float
    truth: float | None
    reevaluated: bool
    warmup: bool
    ood: bool


@dataclass(eq=False)
class AssignmentTrace:
    """
    Per-step assignment, scores and forecasts over one stream

    Arrays are aligned on ``steps``; ``scores[i]`` are the centroid
    distances that chose ``chosen[i]``. Predictions and truth are in the
    stream's raw units.
    """

    cell_id: str
    n: int
    cadence: int
    assign_mode: AssignMode
    steps: np.ndarray
    scores: np.ndarray
    chosen: np.ndarray
    reevaluated: np.ndarray
    predictions: np.ndarray
    truth: np.ndarray | None
    warmup: np.ndarray
    ood: np.ndarray
    eval_range: float = 1.0
    buffered: list[np.ndarray] = field(default_factory=list)
    buffered_steps: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def k(self) -> int:
        return self.scores.shape[1]

    @property
    def has_truth(self) -> bool:
        return self.truth is not None

    @property
    def records(self) -> list[StepRecord]:
        return [
            StepRecord(
                step=int(self.steps[i]),
                scores=tuple(float(s) for s in self.scores[i]),
                cluster=int(self.chosen[i]),
                prediction=float(self.predictions[i]),
                truth=None if self.truth is None else float(self.truth[i]),
                reevaluated=bool(self.reevaluated[i]),
                warmup=bool(self.warmup[i]),
                ood=bool(self.ood[i]),
            )
            for i in range(len(self))
        ]

    def buffered_segments(self) -> SegmentSet:
        return SegmentSet.from_values(self.buffered, source=f"{self.cell_id}:ood")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"step": self.steps})
        for c in range(self.k):
            frame[f"score_c{c}"] = self.scores[:, c]
        frame["chosen"] = self.chosen
        frame["prediction"] = self.predictions
        frame["truth"] = self.truth if self.truth is not None else np.nan
        frame["reevaluated"] = self.reevaluated.astype(int)
        frame["warmup"] = self.warmup.astype(int)
        frame["ood"] = self.ood.astype(int)
        return frame

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.6f", lineterminator="\n")


def assign_window(
    cluster_model: ClusterModel, trailing: Any, params: DtwParams | None = None
) -> tuple[int, float]:
    """Nearest cluster to a normalized length-n window (lowest index on ties)"""
    try:
        return predict_cluster(cluster_model, trailing, params)
    except ClusteringError as e:
        raise AssignmentError(str(e)) from e


class _StreamView:
    """Normalized windows of one stream, by running envelope or by fixed stats"""

    def __init__(
        self,
        stream: TimeSeries,
        stats: NormalizationStats | None,
        starts: np.ndarray,
        known: np.ndarray,
        n: int,
    ):
        self.stream = stream
        self.stats = stats
        self.starts = starts
        self.known = known
        self.n = n
        self.offsets = starts[:, None] + np.arange(n)[None, :]
        self._cache: dict[str, np.ndarray] = {}
        self.hours = (stream.start_time.hour + np.arange(len(stream))) % 24

    def raw(self, name: str) -> np.ndarray:
        if name in self.stream.features:
            return self.stream.features[name]
        if name == WEEKEND_FLAG:
            return (self.stream.timestamps.dayofweek >= 5).astype(float)
        if name in _RAW_SOURCES and _RAW_SOURCES[name] in self.stream.features:
            return self.stream.features[_RAW_SOURCES[name]]
        raise AssignmentError(f"Stream {self.stream.cell_id} lacks channel '{name}'")

    def envelope(self, name: str, known: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Min and max of a channel over the first ``known`` steps"""
        if self.stats is not None:
            if name not in self.stats.ranges:
                raise AssignmentError(f"No normalization stats for channel '{name}'")
            lo, hi = self.stats.ranges[name]
            return np.full(len(known), lo), np.full(len(known), hi)
        values = self.raw(name)
        lo = np.minimum.accumulate(values)[known - 1]
        hi = np.maximum.accumulate(values)[known - 1]
        return lo, hi

    def denormalize(self, name: str, scaled: np.ndarray, known: np.ndarray) -> np.ndarray:
        """Back to raw units, by the fixed stats or by the envelope known at each step"""
        if self.stats is not None:
            return self.stats.denormalize(name, scaled)
        lo, hi = self.envelope(name, known)
        return scaled * (hi - lo) + lo

    def _scale(self, windows: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        span = (hi - lo)[:, None]
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (windows - lo[:, None]) / safe, 0.0)

    def _causal_peak(self) -> np.ndarray:
        """Peak flags as they would be computed from each step's known prefix"""
        output = self.stream.output
        onehot = np.eye(24)[self.hours]
        hour_sum = np.cumsum(onehot * output[:, None], axis=0)[self.known - 1]
        hour_count = np.cumsum(onehot, axis=0)[self.known - 1]
        overall = np.cumsum(output)[self.known - 1] / self.known
        with np.errstate(invalid="ignore", divide="ignore"):
            means = hour_sum / hour_count
        peak = (hour_count > 0) & (means >= overall[:, None] - 1e-12)
        rows = np.arange(len(self.known))[:, None]
        return peak[rows, self.hours[self.offsets]].astype(float)

    def windows(self, name: str) -> np.ndarray:
        """(steps, n) normalized windows of one channel"""
        if name in self._cache:
            return self._cache[name]
        source = name
        if name in _RAW_SOURCES and name not in self.stream.features:
            source = _RAW_SOURCES[name]
        if name == PEAK_FLAG and self.stats is None:
            result = self._causal_peak()
        elif name in BINARY_CHANNELS:
            result = self.raw(name)[self.offsets]
        elif self.stats is not None and source not in self.stats.ranges:
            # Engineered channels already prepared with the training stats
            result = self.raw(name)[self.offsets]
        else:
            lo, hi = self.envelope(source, self.known)
            result = self._scale(self.raw(source)[self.offsets], lo, hi)
        self._cache[name] = result
        return result

    def inputs(self, channels: tuple[str, ...], rows: np.ndarray) -> np.ndarray:
        return np.stack([self.windows(c)[rows] for c in channels], axis=2)

    def day_windows(self, name: str, days: np.ndarray) -> np.ndarray:
        """Normalized full-day windows for target-day assignment"""
        offsets = days[:, None] * self.n + np.arange(self.n)[None, :]
        ends = (days + 1) * self.n
        lo, hi = self.envelope(name, ends)
        return self._scale(self.raw(name)[offsets], lo, hi)


def run_stream(
    cluster_model: ClusterModel,
    models: Mapping[int, PredictorModel],
    stream: TimeSeries,
    cadence: int = 1,
    ood: OodPolicy | None = None,
    stats: NormalizationStats | None = None,
    assign_mode: AssignMode = AssignMode.TRAILING,
    params: DtwParams | None = None,
    with_truth: bool = True,
) -> AssignmentTrace:
    """
    Serve a stream step by step with the model of its nearest cluster

    For each target step t from n + m - 1 on, the input window covers steps
    [t - n - m + 1, t - m + 1). Every ``cadence`` steps the cluster is
    reassessed from that window (trailing mode) or from the day holding t
    (target-day mode, which reads the future). Without ``stats`` the stream
    is normalized by its running min/max envelope; the first n forecasts
    then come from the seasonal-naive rule and are flagged as warm-up.

    Args:
        cluster_model: Clustering whose centroids are scored
        models: Predictor per cluster index
        stream: Raw stream (engineered channels optional)
        cadence: Steps between reassessments
        ood: Buffer windows whose best score exceeds ``ood.threshold``
        stats: Training stats of this cell, when it was seen in training
        assign_mode: Which window drives the assignment
        params: DTW parameters (default: the clustering's)
        with_truth: Record the stream's actual values as ground truth

    Raises:
        AssignmentError: Bad cadence, short stream, missing channel, or no
            model for an assigned cluster
    """
    params = params or cluster_model.dtw_params
    n = cluster_model.n
    if cadence < 1:
        raise AssignmentError(f"cadence must be >= 1, got {cadence}")
    if not models:
        raise AssignmentError("No predictor models supplied")
    horizons = {model.spec.horizon for model in models.values()}
    windows = {model.spec.window for model in models.values()}
    if len(horizons) != 1 or windows != {n}:
        raise AssignmentError(
            f"Models must share one horizon and use window n={n} "
            f"(got windows {sorted(windows)}, horizons {sorted(horizons)})"
        )
    m = horizons.pop()
    length = len(stream)
    first = n + m - 1
    if length <= first:
        raise AssignmentError(
            f"Stream {stream.cell_id} has {length} steps; needs more than {first}"
        )

    steps = np.arange(first, length)
    starts = steps - first
    known = starts + n
    view = _StreamView(stream, stats, starts, known, n)
    output = stream.output_channel
    warmup = steps < first + n if stats is None else np.zeros(len(steps), dtype=bool)

    # Assignment
    reevaluated = (steps - first) % cadence == 0
    reeval_rows = np.flatnonzero(reevaluated)
    assign_windows = view.windows(output)[reeval_rows]
    window_starts = starts[reeval_rows].copy()
    if assign_mode is AssignMode.TARGET_DAY:
        days = steps[reeval_rows] // n
        complete = (days + 1) * n <= length
        if complete.any():
            assign_windows = assign_windows.copy()
            assign_windows[complete] = view.day_windows(output, days[complete])
            window_starts[complete] = days[complete] * n
    centroids = cluster_model.centroid_matrix
    reeval_scores = np.column_stack(
        [dtw_to_many(centroid, assign_windows, params) for centroid in centroids]
    )
    carried = np.cumsum(reevaluated) - 1
    scores = reeval_scores[carried]
    chosen = np.argmin(scores, axis=1)

    # Out-of-distribution buffering, non-overlapping windows only
    ood_flags = np.zeros(len(steps), dtype=bool)
    buffered: list[np.ndarray] = []
    buffered_steps: list[int] = []
    if ood is not None:
        last_start: int | None = None
        for j, row in enumerate(reeval_rows):
            if warmup[row] or reeval_scores[j].min() <= ood.threshold:
                continue
            ood_flags[row] = True
            if last_start is None or window_starts[j] >= last_start + n:
                buffered.append(assign_windows[j].copy())
                buffered_steps.append(int(steps[row]))
                last_start = int(window_starts[j])
        if buffered:
            logger.warning(
                f"Stream {stream.cell_id}: {int(ood_flags.sum())} out-of-distribution "
                f"assessments, {len(buffered)} windows buffered"
            )

    # Forecasts, batched per cluster
    predictions = np.empty(len(steps))
    raw_output = stream.output
    predictions[warmup] = raw_output[steps[warmup] - n]
    served = ~warmup
    for cluster in np.unique(chosen[served]):
        cluster = int(cluster)
        if cluster not in models:
            raise AssignmentError(f"No predictor model for assigned cluster {cluster}")
        model = models[cluster]
        rows = np.flatnonzero(served & (chosen == cluster))
        inputs = view.inputs(model.spec.feature_config.selected_channels, rows)
        scaled = predict_batch(model, inputs)
        predictions[rows] = view.denormalize(output, scaled, known[rows])

    if stats is not None:
        lo, hi = stats.ranges[output]
    else:
        lo, hi = float(raw_output.min()), float(raw_output.max())
    eval_range = hi - lo if hi > lo else 1.0

    switches = int(np.count_nonzero(np.diff(chosen)))
    logger.info(
        f"Stream {stream.cell_id}: {len(steps)} steps, cadence {cadence}, "
        f"{switches} cluster switches"
    )
    return AssignmentTrace(
        cell_id=stream.cell_id,
        n=n,
        cadence=cadence,
        assign_mode=assign_mode,
        steps=steps,
        scores=scores,
        chosen=chosen,
        reevaluated=reevaluated,
        predictions=predictions,
        truth=np.array(raw_output[steps], dtype=float) if with_truth else None,
        warmup=warmup,
        ood=ood_flags,
        eval_range=float(eval_range),
        buffered=buffered,
        buffered_steps=buffered_steps,
    )


@dataclass(eq=False)
class ReclusterResult:
    """Outcome of folding an OOD buffer into the clustering"""

    model: ClusterModel
    new_cluster: int
    degenerate: bool
    buffer_barycenter: Barycenter
    nearest_old_distance: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.model.k,
            "new_cluster": self.new_cluster,
            "degenerate": self.degenerate,
            "nearest_old_distance": self.nearest_old_distance,
            "sizes": self.model.sizes,
        }


def ood_recluster(
    original: SegmentSet,
    buffered: SegmentSet,
    old_model: ClusterModel,
    params: DtwParams | None = None,
    buffer_min_segments: int = 1,
    threshold: float | None = None,
    seed: int | None = None,
    max_iter: int = 100,
    quantile: float = 0.99,
) -> ReclusterResult:
    """
    Refit K-means with k + 1 clusters on the original segments plus the buffer

    The first k initial centroids are the old model's, the last is the DBA
    average of the buffer. The recluster is degenerate when that average
    lies within ``threshold`` (DTW) of an old centroid. Without an explicit
    threshold, the ``quantile`` of the original segments' self-distances is
    used, the same rule that flags OOD windows.

    Raises:
        OodError: Buffer smaller than ``buffer_min_segments`` (or empty)
    """
    params = params or old_model.dtw_params
    if len(buffered) == 0 or len(buffered) < buffer_min_segments:
        raise OodError(
            f"OOD buffer holds {len(buffered)} segments; "
            f"reclustering needs {max(buffer_min_segments, 1)}"
        )
    if buffered.n != old_model.n:
        raise OodError(f"Buffered segments have length {buffered.n}, model n={old_model.n}")
    if threshold is None:
        threshold = OodPolicy.from_training(old_model, original, quantile).threshold

    barycenter = dba_average(buffered, params=params)
    nearest = float(dtw_to_many(barycenter.values, old_model.centroid_matrix, params).min())
    degenerate = nearest <= threshold
    if degenerate:
        logger.warning(
            f"Degenerate recluster: buffer barycenter is {nearest:.4g} from an "
            f"existing centroid (threshold {threshold:.4g})"
        )

    init = [c.values for c in old_model.centroids] + [barycenter.values]
    model = fit(
        original.union(buffered),
        old_model.k + 1,
        params,
        max_iter=max_iter,
        seed=old_model.seed if seed is None else seed,
        init_centroids=init,
    )
    logger.info(f"Reclustered into k={model.k}; new cluster sizes {model.sizes}")
    return ReclusterResult(model, old_model.k, degenerate, barycenter, nearest)
