"""
Held-out-cell benchmarks: K sweeps, single-cell baselines, cluster recovery
and regime-switch detection on synthetic data
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from sklearn.metrics import adjusted_rand_score

from .adaptive.engine import AssignmentTrace, run_stream
from .adaptive.evaluation import EvaluationReport, evaluate, tail_key
from .clustering.kmeans import ClusterModel, fit
from .config import HOURS_PER_WEEK, OUTPUT_CHANNEL, FeatureVariant, PredictorKind
from .errors import LeakageError, SeriesError
from .pipeline import (
    FittedFramework,
    FrameworkConfig,
    assert_no_leakage,
    cluster_segments,
    fit_framework,
    predict_stream,
    prepare_training,
)
from .predictors.base import PredictorModel, PredictorSpec
from .synth.generator import SyntheticProfile, SyntheticSpec, generate, holdout_split
from .timeseries.core import (
    SeasonalityConfig,
    SegmentSet,
    TimeSeries,
    consolidate,
    normalize,
    segmentize,
)
from .timeseries.features import FeatureConfig

logger = logging.getLogger(__name__)


@dataclass
class HoldoutResult:
    """The framework served on one held-out cell"""

    variant: FeatureVariant
    k: int
    report: EvaluationReport
    trace: AssignmentTrace
    framework: FittedFramework


def run_holdout(
    train_series: Sequence[TimeSeries],
    held_out: TimeSeries,
    config: FrameworkConfig,
    cadence: int = 1,
    cluster_model: ClusterModel | None = None,
) -> HoldoutResult:
    """Fit on the training cells and evaluate on the unseen cell"""
    framework = fit_framework(train_series, config, cluster_model)
    assert_no_leakage(framework, held_out.cell_id)
    trace = predict_stream(framework, held_out, cadence=cadence)
    report = evaluate(trace, FeatureVariant.get_display_name(config.variant))
    return HoldoutResult(config.variant, config.k, report, trace, framework)


@dataclass
class BaselineResult:
    """A k=1 model trained on one cell and tested on another"""

    train_cell: str
    test_cell: str
    variant: FeatureVariant
    baseline_mae: float
    framework_mae: float | None = None
    test_weeks: int | None = None

    @property
    def ratio(self) -> float | None:
        """Framework MAE over baseline MAE (below 1 favours the framework)"""
        if self.framework_mae is None or self.baseline_mae == 0:
            return None
        return self.framework_mae / self.baseline_mae

    def to_dict(self) -> dict[str, Any]:
        return {
            "train_cell": self.train_cell,
            "test_cell": self.test_cell,
            "config": self.variant.value,
            "baseline_mae": self.baseline_mae,
            "framework_mae": self.framework_mae,
            "ratio": self.ratio,
            "test_weeks": self.test_weeks,
        }


def baseline_single_cell(
    dataset: Sequence[TimeSeries],
    train_cell: str,
    test_cell: str,
    config: FrameworkConfig,
    framework_mae: float | None = None,
    cadence: int = 1,
    test_weeks: int | None = None,
) -> BaselineResult:
    """
    Train one k=1 model on ``train_cell`` alone and score it on ``test_cell``

    With ``test_weeks`` only the final weeks of the test cell are scored; the
    stream before them is context. When the two cells are the same, the
    model is trained on the hours before those weeks.

    Raises:
        LeakageError: Same cell without ``test_weeks``
        SeriesError: Nothing left to train on before the test weeks
    """
    _, train_series = holdout_split(dataset, train_cell)
    _, test_series = holdout_split(dataset, test_cell)
    if train_cell == test_cell:
        if test_weeks is None:
            raise LeakageError(
                f"Same-cell baseline on {train_cell} needs test_weeks to hold out its test hours"
            )
        cut = len(train_series) - test_weeks * HOURS_PER_WEEK
        if cut <= 0:
            raise SeriesError(
                f"Cell {train_cell} has {len(train_series)} hours; "
                f"nothing precedes its last {test_weeks} weeks"
            )
        train_series = train_series.slice(0, cut)

    framework = fit_framework([train_series], replace(config, k=1))
    trace = predict_stream(framework, test_series, cadence=cadence)
    report = evaluate(trace, tail_weeks=test_weeks)
    mae = report.weighted_mae if test_weeks is None else report.breakdown[tail_key(test_weeks)]
    logger.info(f"Baseline {train_cell} -> {test_cell} ({config.variant.value}): MAE {mae:.4f}")
    return BaselineResult(
        train_cell, test_cell, config.variant, mae, framework_mae, test_weeks
    )


def report_rows(k: int, variant: FeatureVariant, report: EvaluationReport) -> list[dict[str, Any]]:
    """Weighted and overall MAE, plus one row per breakdown subset beyond the full stream"""
    rows = [
        {"k": k, "config": variant.value, "metric": metric, "value": getattr(report, metric)}
        for metric in ("weighted_mae", "overall_mae")
    ]
    rows.extend(
        {"k": k, "config": variant.value, "metric": f"mae[{subset}]", "value": value}
        for subset, value in sorted(report.breakdown.items())
        if subset != "full"
    )
    return rows


def baseline_rows(baseline: BaselineResult) -> list[dict[str, Any]]:
    rows = [
        {
            "k": 1,
            "config": baseline.variant.value,
            "metric": f"baseline_mae[{baseline.train_cell}]",
            "value": baseline.baseline_mae,
        }
    ]
    if baseline.ratio is not None:
        rows.append(
            {
                "k": 1,
                "config": baseline.variant.value,
                "metric": f"framework_to_baseline[{baseline.train_cell}]",
                "value": baseline.ratio,
            }
        )
    return rows


@dataclass
class SweepResult:
    """Weighted MAE per (k, configuration) plus single-cell baselines"""

    holdout_cell: str
    results: list[HoldoutResult] = field(default_factory=list)
    baselines: list[BaselineResult] = field(default_factory=list)

    def table(self) -> dict[FeatureVariant, dict[int, float]]:
        table: dict[FeatureVariant, dict[int, float]] = {}
        for result in self.results:
            table.setdefault(result.variant, {})[result.k] = result.report.weighted_mae
        return table

    def to_long_rows(self) -> list[dict[str, Any]]:
        """Rows of (k, config, metric, value)"""
        rows = []
        for result in self.results:
            rows.extend(report_rows(result.k, result.variant, result.report))
        for baseline in self.baselines:
            rows.extend(baseline_rows(baseline))
        return rows

    def to_dict(self) -> dict[str, Any]:
        return {
            "holdout_cell": self.holdout_cell,
            "reports": [r.report.to_dict() for r in self.results],
            "baselines": [b.to_dict() for b in self.baselines],
        }


def sweep_k(
    dataset: Sequence[TimeSeries],
    holdout_cell: str,
    k_values: Sequence[int],
    variants: Sequence[FeatureVariant],
    config: FrameworkConfig,
    cadence: int = 1,
    baseline_cell: str | None = None,
    tail_weeks: int | None = 4,
) -> SweepResult:
    """
    Evaluate the framework for every (k, configuration) on one held-out cell

    Clustering depends only on the output channel, so one clustering per k
    is shared by all configurations. Each report scores the full held-out
    cell and, with ``tail_weeks``, its final weeks. When ``baseline_cell``
    is given, a k=1 model trained on that cell alone is scored for every
    configuration next to the framework's largest-k result, on the final
    weeks when ``tail_weeks`` is set. ``baseline_cell == holdout_cell``
    trains the baseline on the held-out cell's own earlier weeks.
    """
    train_series, held_out = holdout_split(dataset, holdout_cell)
    result = SweepResult(holdout_cell)
    clusterings: dict[int, ClusterModel] = {}

    for variant in variants:
        variant_config = replace(config, variant=variant)
        prepared = prepare_training(train_series, variant_config)
        for k in k_values:
            k_config = replace(variant_config, k=k)
            if k not in clusterings:
                clusterings[k] = cluster_segments(prepared.segments, k_config)
            framework = fit_framework(train_series, k_config, clusterings[k], prepared)
            assert_no_leakage(framework, holdout_cell)
            trace = predict_stream(framework, held_out, cadence=cadence)
            report = evaluate(trace, FeatureVariant.get_display_name(variant), tail_weeks)
            result.results.append(HoldoutResult(variant, k, report, trace, framework))
            logger.info(f"k={k} {variant.value}: weighted MAE {report.weighted_mae:.4f}")

        if baseline_cell is not None:
            best = next(
                r for r in result.results if r.variant == variant and r.k == max(k_values)
            )
            framework_mae = (
                best.report.weighted_mae
                if tail_weeks is None
                else best.report.breakdown[tail_key(tail_weeks)]
            )
            result.baselines.append(
                baseline_single_cell(
                    dataset,
                    baseline_cell,
                    holdout_cell,
                    variant_config,
                    framework_mae,
                    cadence,
                    test_weeks=tail_weeks,
                )
            )
    return result


def normalized_segments(series_set: Sequence[TimeSeries], n: int = 24) -> SegmentSet:
    """Per-cell min-max normalized output segments"""
    config = SeasonalityConfig(n=n)
    return consolidate(segmentize(normalize(s)[0], config) for s in series_set)


def cluster_recovery(
    spec: SyntheticSpec,
    seeds: Sequence[int],
    k: int | None = None,
    config: FrameworkConfig | None = None,
) -> list[float]:
    """Adjusted Rand index between recovered clusters and generator labels, per seed"""
    config = config or FrameworkConfig()
    k = k or len(spec.profiles)
    scores = []
    for seed in seeds:
        dataset = generate(replace(spec, seed=seed))
        segments = normalized_segments(dataset.series, config.seasonality.n)
        truth = [dataset.labels[s.source_cell][s.day_index] for s in segments]
        model = fit(
            segments,
            k,
            config.dtw,
            max_iter=config.kmeans_max_iter,
            seed=seed,
            dba_max_iter=config.dba_max_iter,
            dba_tol=config.dba_tol,
        )
        scores.append(float(adjusted_rand_score(truth, model.assignments)))
        logger.info(f"Cluster recovery seed {seed}: ARI {scores[-1]:.3f}")
    return scores


def profile_cluster_model(
    profiles: Sequence[SyntheticProfile], seed: int = 0
) -> tuple[ClusterModel, list[int]]:
    """
    A clustering whose centroids are the min-max normalized profiles

    Returns the model and the cluster index of each profile.
    """
    shapes = []
    for profile in profiles:
        values = profile.values
        shapes.append((values - values.min()) / (values.max() - values.min()))
    model = fit(SegmentSet.from_values(shapes, source="profiles"), len(shapes), seed=seed)
    return model, [int(c) for c in model.assignments]


@dataclass
class SwitchOutcome:
    """Where the assignment followed a mid-stream profile switch"""

    switch_step: int
    detected_step: int | None
    n: int
    on_target_before_switch: bool = False
    pre_switch_accuracy: float = 1.0

    @property
    def delay(self) -> int | None:
        return None if self.detected_step is None else self.detected_step - self.switch_step

    @property
    def success(self) -> bool:
        """Off the new cluster just before the switch, on it within n steps after"""
        return (
            not self.on_target_before_switch and self.delay is not None and self.delay <= self.n
        )


def regime_switch_trial(
    seed: int,
    cluster_model: ClusterModel,
    profile_clusters: Sequence[int],
    profiles: Sequence[SyntheticProfile],
    days_before: int = 3,
    days_after: int = 3,
    noise_sigma: float = 0.05,
) -> SwitchOutcome:
    """
    Stream ``days_before`` days of one profile then ``days_after`` of another
    and find the first step, from the switch on, assigned to the new profile

    A hit only counts as a detection when the step before the switch was
    assigned elsewhere. ``pre_switch_accuracy`` is the share of served steps
    before the switch assigned to the old profile's cluster.
    """
    rng = np.random.default_rng(seed)
    before, after = rng.choice(len(profiles), size=2, replace=False)
    n = cluster_model.n
    days = [profiles[before].values] * days_before + [profiles[after].values] * days_after
    volume = np.maximum(np.concatenate(days) + rng.normal(0, noise_sigma, n * len(days)), 0)
    stream = TimeSeries(f"switch_{seed}", "2024-01-01", {OUTPUT_CHANNEL: volume})

    uni = FeatureConfig(FeatureVariant.UNI, (OUTPUT_CHANNEL,))
    naive = PredictorModel(PredictorSpec(PredictorKind.SEASONAL_NAIVE, uni, window=n), np.zeros(0))
    models = {c: naive for c in range(cluster_model.k)}
    trace = run_stream(cluster_model, models, stream, cadence=1)

    switch_step = days_before * n
    target = profile_clusters[after]
    pre = (trace.steps < switch_step) & ~trace.warmup
    pre_accuracy = (
        float(np.mean(trace.chosen[pre] == profile_clusters[before])) if pre.any() else 0.0
    )
    last_before = np.flatnonzero(trace.steps == switch_step - 1)
    on_target = bool(len(last_before) and trace.chosen[last_before[0]] == target)

    hits = np.flatnonzero((trace.steps >= switch_step) & (trace.chosen == target))
    detected = int(trace.steps[hits[0]]) if len(hits) else None
    return SwitchOutcome(switch_step, detected, n, on_target, pre_accuracy)
