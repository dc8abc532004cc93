"""
Time-series K-means with DTW assignment and DBA centroid updates
"""

import json
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import ClusteringError
from ..timeseries.core import SegmentSet
from .dba import DEFAULT_MAX_ITER, DEFAULT_TOL, Barycenter, dba_average
from .dtw import DtwParams, dtw_to_many

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """K DBA centroids plus the segment-to-cluster assignment"""

    k: int
    n: int
    centroids: tuple[Barycenter, ...]
    assignments: np.ndarray
    inertia: float
    seed: int
    iterations_run: int
    dtw_params: DtwParams
    inertia_history: tuple[float, ...] = ()
    converged: bool = False

    def __post_init__(self):
        if self.k < 1 or len(self.centroids) != self.k:
            raise ClusteringError(f"Model declares k={self.k} with {len(self.centroids)} centroids")
        assignments = np.array(self.assignments, dtype=int)
        assignments.setflags(write=False)
        object.__setattr__(self, "assignments", assignments)

    @property
    def centroid_matrix(self) -> np.ndarray:
        return np.stack([c.values for c in self.centroids])

    @property
    def sizes(self) -> list[int]:
        return cluster_sizes(self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "n": self.n,
            "seed": self.seed,
            "centroids": [c.values.tolist() for c in self.centroids],
            "centroid_inertia": [c.inertia for c in self.centroids],
            "sizes": self.sizes,
            "inertia": self.inertia,
            "inertia_history": list(self.inertia_history),
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "assignments": self.assignments.tolist(),
            "dtw_params": self.dtw_params.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ClusterModel":
        inertias = data.get("centroid_inertia", [0.0] * data["k"])
        return cls(
            k=data["k"],
            n=data["n"],
            centroids=tuple(
                Barycenter(np.array(v, dtype=float), float(i), 0)
                for v, i in zip(data["centroids"], inertias, strict=True)
            ),
            assignments=np.array(data.get("assignments", []), dtype=int),
            inertia=float(data["inertia"]),
            seed=data["seed"],
            iterations_run=data.get("iterations_run", 0),
            dtw_params=DtwParams.from_dict(data.get("dtw_params", {})),
            inertia_history=tuple(data.get("inertia_history", ())),
            converged=data.get("converged", False),
        )

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def from_json(cls, path: str | Path) -> "ClusterModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _as_matrix(segments: SegmentSet | np.ndarray) -> np.ndarray:
    if isinstance(segments, SegmentSet):
        return np.asarray(segments.values, dtype=float)
    return np.asarray(segments, dtype=float)


def _distances(
    X: np.ndarray, centroids: list[np.ndarray], params: DtwParams
) -> np.ndarray:
    """(N, k) DTW distances from every segment to every centroid"""
    return np.column_stack([dtw_to_many(c, X, params) for c in centroids])


def _plus_plus_init(
    X: np.ndarray,
    k: int,
    params: DtwParams,
    rng: np.random.Generator,
    seeds: Sequence[np.ndarray] = (),
) -> list[np.ndarray]:
    """k-means++ seeding with squared DTW distances, keeping any given seeds"""
    centroids = [np.array(s, dtype=float) for s in seeds]
    picked: set[int] = set()
    if not centroids:
        first = int(rng.integers(len(X)))
        picked.add(first)
        centroids.append(X[first].copy())
    nearest = np.min(_distances(X, centroids, params), axis=1)

    while len(centroids) < k:
        weights = nearest**2
        total = weights.sum()
        if total > 0:
            index = int(rng.choice(len(X), p=weights / total))
        else:
            remaining = [i for i in range(len(X)) if i not in picked]
            index = int(rng.choice(remaining))
        picked.add(index)
        centroids.append(X[index].copy())
        nearest = np.minimum(nearest, dtw_to_many(X[index], X, params))
    return centroids


def _repair_empty(
    labels: np.ndarray,
    distances: np.ndarray,
    centroids: list[np.ndarray],
    X: np.ndarray,
) -> np.ndarray:
    """Give each empty cluster the segment farthest from its own centroid"""
    labels = labels.copy()
    k = len(centroids)
    for cluster in range(k):
        if np.any(labels == cluster):
            continue
        sizes = np.bincount(labels, minlength=k)
        own = distances[np.arange(len(labels)), labels]
        donors = np.flatnonzero(sizes[labels] > 1)
        index = int(donors[np.argmax(own[donors])])
        logger.warning(
            f"Cluster {cluster} empty; reseeded with segment {index} "
            f"(distance {own[index]:.4g})"
        )
        labels[index] = cluster
        centroids[cluster] = X[index].copy()
        distances[index, cluster] = 0.0
    return labels


def fit(
    segments: SegmentSet | np.ndarray,
    k: int,
    params: DtwParams | None = None,
    max_iter: int = 100,
    seed: int = 0,
    *,
    dba_max_iter: int = DEFAULT_MAX_ITER,
    dba_tol: float = DEFAULT_TOL,
    init_centroids: Sequence[Sequence[float]] | None = None,
    workers: int = 1,
) -> ClusterModel:
    """
    Lloyd-style time-series K-means

    Assign every segment to its DTW-nearest centroid, then recompute each
    centroid by DBA warm-started from its previous value. Stops when the
    assignment no longer changes or after ``max_iter`` rounds.

    Args:
        segments: Consolidated segments (or an (N, n) array)
        k: Number of clusters
        params: DTW parameters
        max_iter: Maximum Lloyd iterations
        seed: Seed for k-means++ initialization
        dba_max_iter: Inner DBA iteration cap
        dba_tol: Inner DBA relative tolerance
        init_centroids: Centroids to start from; k-means++ adds the rest
        workers: Threads used for per-cluster DBA updates

    Raises:
        ClusteringError: Empty input, k out of range or bad initial centroids
    """
    params = params or DtwParams()
    X = _as_matrix(segments)
    if X.ndim != 2 or len(X) == 0:
        raise ClusteringError("Cannot cluster an empty segment set")
    if k < 1:
        raise ClusteringError(f"k must be >= 1, got {k}")
    if k > len(X):
        raise ClusteringError(f"k={k} exceeds the number of segments ({len(X)})")
    if max_iter < 1:
        raise ClusteringError(f"max_iter must be >= 1, got {max_iter}")
    seeds = [np.asarray(c, dtype=float) for c in (init_centroids or ())]
    if len(seeds) > k or any(s.shape != (X.shape[1],) for s in seeds):
        raise ClusteringError("Initial centroids must number at most k and have length n")

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(X, k, params, rng, seeds)
    barycenters: list[Barycenter] = []
    labels: np.ndarray | None = None
    history: list[float] = []
    converged = False
    iterations = 0

    for iteration in range(1, max_iter + 1):
        distances = _distances(X, centroids, params)
        new_labels = _repair_empty(np.argmin(distances, axis=1), distances, centroids, X)
        if labels is not None and np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        iterations = iteration

        def update(cluster: int, labels: np.ndarray = labels) -> Barycenter:
            return dba_average(
                X[labels == cluster], centroids[cluster], dba_max_iter, dba_tol, params
            )

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                barycenters = list(pool.map(update, range(k)))
        else:
            barycenters = [update(c) for c in range(k)]
        centroids = [b.values.copy() for b in barycenters]
        history.append(float(sum(b.inertia for b in barycenters)))
        logger.debug(f"K-means k={k} iteration {iteration}: inertia {history[-1]:.6g}")

    assert labels is not None
    logger.info(
        f"K-means k={k}: {iterations} iterations, inertia {history[-1]:.6g}"
        f"{'' if converged else ' (iteration cap reached)'}"
    )
    return ClusterModel(
        k=k,
        n=X.shape[1],
        centroids=tuple(barycenters),
        assignments=labels,
        inertia=history[-1],
        seed=seed,
        iterations_run=iterations,
        dtw_params=params,
        inertia_history=tuple(history),
        converged=converged,
    )


def cluster_scores(
    model: ClusterModel, window: Sequence[float], params: DtwParams | None = None
) -> np.ndarray:
    """DTW distance from a length-n window to each centroid"""
    window = np.asarray(window, dtype=float)
    if window.shape != (model.n,):
        raise ClusteringError(f"Window has length {len(window)}, model expects n={model.n}")
    return dtw_to_many(window, model.centroid_matrix, params or model.dtw_params)


def predict_cluster(
    model: ClusterModel, window: Sequence[float], params: DtwParams | None = None
) -> tuple[int, float]:
    """Nearest centroid (lowest index on ties) and its DTW distance"""
    scores = cluster_scores(model, window, params)
    best = int(np.argmin(scores))
    return best, float(scores[best])


def cluster_sizes(model: ClusterModel) -> list[int]:
    """Member count per cluster"""
    return np.bincount(model.assignments, minlength=model.k).astype(int).tolist()


def self_distances(model: ClusterModel, segments: SegmentSet | np.ndarray) -> np.ndarray:
    """DTW distance of each training segment to its assigned centroid"""
    X = _as_matrix(segments)
    if len(X) != len(model.assignments):
        raise ClusteringError("Segments do not match the model's assignments")
    centroids = model.centroid_matrix
    out = np.empty(len(X))
    for cluster in range(model.k):
        members = model.assignments == cluster
        if members.any():
            out[members] = dtw_to_many(centroids[cluster], X[members], model.dtw_params)
    return out
