"""
DTW barycenter averaging (DBA)
"""

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import ClusteringError
from ..timeseries.core import Segment, SegmentSet, frozen_array
from .dtw import DtwParams, dtw_matrix, dtw_paths_to_many, dtw_to_many

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 30
DEFAULT_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class Barycenter:
    """Representative sequence of a set of segments"""

    values: np.ndarray
    inertia: float
    iterations_used: int
    inertia_history: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", frozen_array(self.values))
        if self.inertia < 0:
            raise ClusteringError(f"Barycenter inertia must be >= 0, got {self.inertia}")

    @property
    def n(self) -> int:
        return len(self.values)


def member_matrix(members: Iterable[Any] | SegmentSet) -> np.ndarray:
    """Stack segments or raw sequences into an (N, n) array"""
    if isinstance(members, SegmentSet):
        matrix = np.asarray(members.values, dtype=float)
    elif isinstance(members, np.ndarray) and members.ndim == 2:
        matrix = members.astype(float)
    else:
        rows = [m.values if isinstance(m, Segment) else np.asarray(m, dtype=float) for m in members]
        if not rows:
            raise ClusteringError("Cannot average an empty member list")
        lengths = {len(r) for r in rows}
        if len(lengths) > 1:
            raise ClusteringError(f"Members have mixed lengths {sorted(lengths)}")
        matrix = np.stack(rows)
    if matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise ClusteringError("Cannot average an empty member list")
    return matrix


def dba_inertia(
    members: Iterable[Any] | SegmentSet,
    center: Sequence[float],
    params: DtwParams | None = None,
) -> float:
    """Sum over members of the squared DTW distance to ``center``"""
    matrix = member_matrix(members)
    distances = dtw_to_many(np.asarray(center, dtype=float), matrix, params)
    return float(np.sum(distances**2))


def dba_medoid(
    members: Iterable[Any] | SegmentSet, params: DtwParams | None = None
) -> tuple[int, np.ndarray]:
    """Member with the smallest total DTW distance to the others (lowest index on ties)"""
    matrix = member_matrix(members)
    if len(matrix) == 1:
        return 0, matrix[0].copy()
    totals = dtw_matrix(matrix, matrix, params).sum(axis=1)
    index = int(np.argmin(totals))
    return index, matrix[index].copy()


def _refine(center: np.ndarray, matrix: np.ndarray, params: DtwParams) -> np.ndarray:
    """One DBA update: average the member values aligned to each coordinate"""
    _, paths = dtw_paths_to_many(center, matrix, params)
    sums = np.zeros(len(center))
    counts = np.zeros(len(center))
    for row, path in zip(matrix, paths, strict=True):
        pairs = np.asarray(path.pairs)
        np.add.at(sums, pairs[:, 0], row[pairs[:, 1]])
        np.add.at(counts, pairs[:, 0], 1.0)
    return sums / counts


def dba_average(
    members: Iterable[Any] | SegmentSet,
    init: Sequence[float] | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    params: DtwParams | None = None,
) -> Barycenter:
    """
    Iteratively refine a barycenter of equal-length members

    Each iteration aligns every member to the current center and moves each
    center coordinate to the mean of the member values mapped onto it.
    Iteration stops when the relative inertia improvement drops below
    ``tol`` or after ``max_iter`` updates. An update that would raise the
    inertia is rejected, so the recorded inertia never increases.

    Args:
        members: Segments or equal-length sequences
        init: Starting sequence (default: the medoid of the members)
        max_iter: Maximum number of updates
        tol: Relative improvement threshold
        params: DTW parameters
    """
    params = params or DtwParams()
    if max_iter < 1:
        raise ClusteringError(f"max_iter must be >= 1, got {max_iter}")
    if not tol > 0:
        raise ClusteringError(f"tol must be positive, got {tol}")

    matrix = member_matrix(members)
    if init is None:
        _, center = dba_medoid(matrix, params)
    else:
        center = np.array(init, dtype=float)
        if center.shape != (matrix.shape[1],):
            raise ClusteringError(
                f"Initial center has length {len(center)}, members have {matrix.shape[1]}"
            )

    inertia = dba_inertia(matrix, center, params)
    history = [inertia]
    iterations = 0
    for iterations in range(1, max_iter + 1):
        candidate = _refine(center, matrix, params)
        candidate_inertia = dba_inertia(matrix, candidate, params)
        if candidate_inertia > inertia:
            break
        improvement = (inertia - candidate_inertia) / inertia if inertia > 0 else 0.0
        center, inertia = candidate, candidate_inertia
        history.append(inertia)
        if improvement < tol:
            break

    logger.debug(
        f"DBA over {len(matrix)} members: inertia {history[0]:.6g} -> {inertia:.6g} "
        f"in {iterations} iterations"
    )
    return Barycenter(center, inertia, iterations, tuple(history))
