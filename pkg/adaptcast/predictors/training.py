"""
Training loop, gradient checking and per-cluster training
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..clustering.kmeans import ClusterModel
from ..errors import GradientCheckError, PredictorError, TrainingDivergenceError
from ..timeseries.core import SegmentSet, TimeSeries
from .base import PredictorModel, PredictorSpec, TrainingProtocol
from .registry import PredictorRegistry
from .windows import WindowSet, make_windows, split_windows

logger = logging.getLogger(__name__)


def train(
    spec: PredictorSpec,
    protocol: TrainingProtocol,
    train_windows: WindowSet,
    val_windows: WindowSet,
    cluster_id: int | None = None,
) -> PredictorModel:
    """
    Fit a predictor with mini-batch SGD with momentum on MAE

    The learning rate is multiplied by ``plateau_factor`` (floored at
    ``min_lr``) whenever validation loss has not improved for
    ``plateau_patience`` epochs; training stops after
    ``early_stop_patience`` epochs without improvement or at ``epochs``.

    Args:
        spec: What to build
        protocol: How to train it
        train_windows: Training windows
        val_windows: Validation windows
        cluster_id: Cluster whose data trains the model

    Returns:
        PredictorModel holding the parameters of the best validation epoch

    Raises:
        PredictorError: Empty train or validation set
        TrainingDivergenceError: A loss became non-finite
    """
    predictor = PredictorRegistry.get(spec)
    if not predictor.trainable:
        return PredictorModel(spec, np.zeros(0), (), cluster_id, protocol)
    if len(train_windows) == 0 or len(val_windows) == 0:
        raise PredictorError("Training needs nonempty train and validation windows")

    X = predictor.check_inputs(train_windows.inputs)
    y = train_windows.targets
    X_val = predictor.check_inputs(val_windows.inputs)
    y_val = val_windows.targets

    rng = np.random.default_rng(spec.seed)
    theta = predictor.init_parameters(rng)
    velocity = np.zeros_like(theta)
    lr = protocol.lr0

    best_val = np.inf
    best_theta = theta.copy()
    best_epoch = 0
    since_best = 0
    since_reduction = 0
    history: list[tuple[float, float, float]] = []

    for epoch in range(1, protocol.epochs + 1):
        order = rng.permutation(len(X))
        total = 0.0
        for lo in range(0, len(X), protocol.batch_size):
            batch = order[lo : lo + protocol.batch_size]
            loss, gradient = predictor.loss_and_gradient(theta, X[batch], y[batch])
            if not np.isfinite(loss) or not np.all(np.isfinite(gradient)):
                raise TrainingDivergenceError(epoch, lr, loss)
            velocity = protocol.momentum * velocity - lr * gradient
            theta = theta + velocity
            total += loss * len(batch)

        val_loss = predictor.loss(theta, X_val, y_val)
        if not np.isfinite(val_loss):
            raise TrainingDivergenceError(epoch, lr, val_loss)
        history.append((total / len(X), val_loss, lr))

        if val_loss < best_val:
            best_val, best_theta, best_epoch = val_loss, theta.copy(), epoch
            since_best = since_reduction = 0
        else:
            since_best += 1
            since_reduction += 1
            if since_reduction >= protocol.plateau_patience:
                lr = max(lr * protocol.plateau_factor, protocol.min_lr)
                since_reduction = 0
                logger.debug(f"Epoch {epoch}: validation plateau, lr -> {lr:g}")
            if since_best >= protocol.early_stop_patience:
                logger.debug(f"Early stopping at epoch {epoch}")
                break

    logger.info(
        f"Trained {spec.kind.value} (cluster {cluster_id}) on {len(X)} windows: "
        f"best val MAE {best_val:.4f} at epoch {best_epoch}/{len(history)}"
    )
    return PredictorModel(spec, best_theta, tuple(history), cluster_id, protocol, best_epoch)


@dataclass
class GradientCheckResult:
    """Analytic vs central-difference gradients of the MAE loss"""

    max_relative_error: float
    max_absolute_error: float
    analytic: np.ndarray
    numeric: np.ndarray


def gradient_check(
    spec: PredictorSpec,
    inputs: np.ndarray,
    target: float,
    epsilon: float = 1e-5,
    parameters: np.ndarray | None = None,
) -> GradientCheckResult:
    """
    Compare the BPTT gradient with central finite differences on every parameter

    The relative error of a parameter is |a - d| / max(|a| + |d|, 1e-6).

    Args:
        spec: Predictor specification (keep it small)
        inputs: One (window, features) input
        target: Its target value
        epsilon: Finite-difference step
        parameters: Point to check at (default: seeded initialization)

    Raises:
        GradientCheckError: Non-positive epsilon, or the prediction lies
            within 10 * epsilon of the target where MAE is not smooth
    """
    if not epsilon > 0:
        raise GradientCheckError(f"epsilon must be positive, got {epsilon}")
    predictor = PredictorRegistry.get(spec)
    if not predictor.trainable:
        raise GradientCheckError(f"{spec.kind.value} has no gradient to check")
    X = predictor.check_inputs(inputs)[:1]
    y = np.array([float(target)])
    theta = (
        predictor.init_parameters(np.random.default_rng(spec.seed))
        if parameters is None
        else np.array(parameters, dtype=float)
    )

    prediction = predictor.predict(theta, X)[0]
    if abs(prediction - y[0]) <= 10 * epsilon:
        raise GradientCheckError(
            f"|prediction - target| = {abs(prediction - y[0]):.3g} is within 10*epsilon "
            "of the MAE kink; pick a target further from the prediction"
        )

    _, analytic = predictor.loss_and_gradient(theta, X, y)
    numeric = np.empty_like(theta)
    for index in range(len(theta)):
        shifted = theta.copy()
        shifted[index] += epsilon
        plus = predictor.loss(shifted, X, y)
        shifted[index] -= 2 * epsilon
        minus = predictor.loss(shifted, X, y)
        numeric[index] = (plus - minus) / (2 * epsilon)

    absolute = np.abs(analytic - numeric)
    relative = absolute / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)
    return GradientCheckResult(
        float(relative.max()), float(absolute.max()), analytic, numeric
    )


@dataclass
class PerClusterTraining:
    """Models for every cluster plus how the windows were distributed"""

    models: dict[int, PredictorModel]
    window_counts: dict[int, int]
    fallback_clusters: list[int] = field(default_factory=list)
    global_model: PredictorModel | None = None
    windows: WindowSet | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "window_counts": {str(c): n for c, n in sorted(self.window_counts.items())},
            "fallback_clusters": self.fallback_clusters,
        }


def attribute_windows(
    cluster_model: ClusterModel, segments: SegmentSet, windows: WindowSet
) -> np.ndarray:
    """
    Cluster of the segment (day) holding each window's target

    Targets before the first or after the last segment of their series go
    to that first or last segment; windows of series with no segment get -1.
    """
    if len(segments) != len(cluster_model.assignments):
        raise PredictorError("Segments do not match the cluster model's assignments")
    days: dict[tuple[str, int], list[tuple[int, int]]] = {}
    for segment, label in zip(segments, cluster_model.assignments, strict=True):
        days.setdefault((segment.source_cell, segment.part), []).append(
            (segment.start, int(label))
        )

    labels = np.full(len(windows), -1, dtype=int)
    for key, entries in days.items():
        entries.sort()
        starts = np.array([s for s, _ in entries])
        clusters = np.array([c for _, c in entries])
        mask = np.array(
            [(c, int(p)) == key for c, p in zip(windows.cell_ids, windows.parts, strict=True)],
            dtype=bool,
        )
        if not mask.any():
            continue
        position = np.searchsorted(starts, windows.target_index[mask], side="right") - 1
        labels[mask] = clusters[np.clip(position, 0, len(starts) - 1)]
    return labels


def train_per_cluster(
    cluster_model: ClusterModel,
    segments: SegmentSet,
    series_set: Sequence[TimeSeries],
    spec: PredictorSpec,
    protocol: TrainingProtocol,
    workers: int = 1,
) -> PerClusterTraining:
    """
    Train one predictor per cluster on the windows whose target day it owns

    Clusters with fewer than ``batch_size`` windows are served by a model
    trained on every window.

    Args:
        cluster_model: Fitted clustering of ``segments``
        segments: The segments the clustering was fitted on
        series_set: Normalized series with the configured channels applied
        spec: Predictor specification
        protocol: Training protocol
        workers: Threads used to train clusters in parallel

    Raises:
        PredictorError: Every cluster is degenerate
    """
    windows = WindowSet.concat(
        [
            make_windows(s, spec.feature_config, spec.window, spec.horizon)
            for s in series_set
        ]
    )
    labels = attribute_windows(cluster_model, segments, windows)
    counts = {c: int(np.sum(labels == c)) for c in range(cluster_model.k)}
    unattributed = int(np.sum(labels < 0))
    if unattributed:
        logger.debug(f"{unattributed} windows belong to no segment; used only globally")

    predictor = PredictorRegistry.get(spec)
    if not predictor.trainable:
        models = {
            c: PredictorModel(spec, np.zeros(0), (), c, protocol) for c in range(cluster_model.k)
        }
        return PerClusterTraining(models, counts, windows=windows)

    minimum = max(protocol.batch_size, 2)
    trainable = [c for c in range(cluster_model.k) if counts[c] >= minimum]
    fallback = [c for c in range(cluster_model.k) if counts[c] < minimum]
    if not trainable:
        raise PredictorError(
            f"All {cluster_model.k} clusters have fewer than {minimum} training windows"
        )

    def fit_subset(cluster_id: int | None, subset: WindowSet) -> PredictorModel:
        train_part, val_part = split_windows(subset, protocol.validation_fraction, spec.seed)
        return train(spec, protocol, train_part, val_part, cluster_id)

    jobs: list[tuple[int | None, WindowSet]] = [
        (c, windows.subset(labels == c)) for c in trainable
    ]
    if fallback:
        for c in fallback:
            logger.warning(
                f"Cluster {c} has {counts[c]} windows (< {minimum}); "
                "falling back to the global model"
            )
        jobs.append((None, windows))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trained = list(pool.map(lambda job: fit_subset(*job), jobs))
    else:
        trained = [fit_subset(*job) for job in jobs]

    models = {c: model for (c, _), model in zip(jobs, trained, strict=True) if c is not None}
    global_model = trained[-1] if fallback else None
    for c in fallback:
        models[c] = global_model
    return PerClusterTraining(
        dict(sorted(models.items())), counts, fallback, global_model, windows
    )
