"""
Dynamic time warping distance and optimal alignment paths

The accumulated-cost recursion is evaluated for one sequence against a stack
of equal-length sequences at once. Each entry of the stack sees exactly the
same floating-point operations as a one-against-one call, so batched and
single results are bit-identical.
"""

import logging
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import DtwError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DtwParams:
    """Cost exponent q and optional Sakoe-Chiba radius"""

    q: float = 2.0
    band: int | None = None

    def __post_init__(self):
        if not self.q > 0:
            raise DtwError(f"DTW exponent q must be positive, got {self.q}")
        if self.band is not None and self.band < 0:
            raise DtwError(f"DTW band must be non-negative, got {self.band}")

    def to_dict(self) -> dict[str, Any]:
        return {"q": self.q, "band": self.band}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DtwParams":
        return cls(q=float(data.get("q", 2.0)), band=data.get("band"))


@dataclass(frozen=True)
class WarpingPath:
    """Admissible alignment as 0-based (i, j) index pairs"""

    pairs: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.pairs)

    def is_admissible(self, len_x: int, len_y: int) -> bool:
        """Starts at (0, 0), ends at (len_x-1, len_y-1), unit monotone steps"""
        if not self.pairs:
            return False
        if self.pairs[0] != (0, 0) or self.pairs[-1] != (len_x - 1, len_y - 1):
            return False
        for (i0, j0), (i1, j1) in zip(self.pairs, self.pairs[1:]):
            if (i1 - i0, j1 - j0) not in ((1, 1), (1, 0), (0, 1)):
                return False
        return True


def _as_sequence(values: Any, label: str = "sequence") -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim != 1 or len(array) == 0:
        raise DtwError(f"DTW input {label} must be a nonempty 1-D sequence")
    return array


def _check_band(len_x: int, len_y: int, params: DtwParams, label: str = "") -> None:
    if params.band is not None and abs(len_x - len_y) > params.band:
        raise DtwError(
            f"Band {params.band} cannot align lengths {len_x} and {len_y}{label}"
        )


def _accumulate(x: np.ndarray, many: np.ndarray, params: DtwParams) -> np.ndarray:
    """
    Accumulated cost of x against every row of ``many``

    Returns an array of shape (len(x)+1, L+1, B) where entry [i, j, b] is the
    cheapest sum of |x_k - y_l|**q over paths from (1, 1) to (i, j).
    """
    len_x = len(x)
    batch, len_y = many.shape
    cost = np.abs(x[:, None, None] - many.T[None, :, :]) ** params.q
    acc = np.full((len_x + 1, len_y + 1, batch), np.inf)
    acc[0, 0] = 0.0
    band = params.band
    for i in range(1, len_x + 1):
        lo, hi = 1, len_y
        if band is not None:
            lo, hi = max(1, i - band), min(len_y, i + band)
        for j in range(lo, hi + 1):
            best = np.minimum(np.minimum(acc[i - 1, j - 1], acc[i - 1, j]), acc[i, j - 1])
            acc[i, j] = cost[i - 1, j - 1] + best
    return acc


def _finish(total: np.ndarray, q: float) -> np.ndarray:
    return np.power(total, 1.0 / q)


def dtw_to_many(
    x: Sequence[float], many: Any, params: DtwParams | None = None
) -> np.ndarray:
    """DTW distance from x to each row of a (B, L) array"""
    params = params or DtwParams()
    x = _as_sequence(x, "x")
    many = np.asarray(many, dtype=float)
    if many.ndim == 1:
        many = many[None, :]
    if many.ndim != 2 or many.shape[1] == 0:
        raise DtwError("DTW input y must be a nonempty sequence")
    if many.shape[0] == 0:
        return np.empty(0)
    _check_band(len(x), many.shape[1], params)
    acc = _accumulate(x, many, params)
    return _finish(acc[len(x), many.shape[1]], params.q)


def dtw_distance(
    x: Sequence[float], y: Sequence[float], params: DtwParams | None = None
) -> float:
    """
    DTW distance (min over admissible paths of sum |x_i - y_j|**q) ** (1/q)

    Raises:
        DtwError: Empty input or a band too narrow for the length difference
    """
    y = _as_sequence(y, "y")
    return float(dtw_to_many(x, y[None, :], params)[0])


def _backtrack(acc: np.ndarray) -> WarpingPath:
    """Trace one accumulated-cost matrix (shape (Lx+1, Ly+1)) back to (1, 1)"""
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    pairs = [(i - 1, j - 1)]
    while (i, j) != (1, 1):
        # Preference on ties: diagonal, then the i step, then the j step
        best: tuple[int, int] | None = None
        best_cost = np.inf
        for ci, cj in ((i - 1, j - 1), (i - 1, j), (i, j - 1)):
            if ci >= 1 and cj >= 1 and (best is None or acc[ci, cj] < best_cost):
                best, best_cost = (ci, cj), acc[ci, cj]
        assert best is not None
        i, j = best
        pairs.append((i - 1, j - 1))
    pairs.reverse()
    return WarpingPath(tuple(pairs))


def dtw_path(
    x: Sequence[float], y: Sequence[float], params: DtwParams | None = None
) -> tuple[float, WarpingPath]:
    """DTW distance together with an optimal warping path"""
    params = params or DtwParams()
    x = _as_sequence(x, "x")
    y = _as_sequence(y, "y")
    _check_band(len(x), len(y), params)
    acc = _accumulate(x, y[None, :], params)[:, :, 0]
    distance = float(_finish(acc[len(x), len(y)], params.q))
    return distance, _backtrack(acc)


def dtw_paths_to_many(
    x: Sequence[float], many: Any, params: DtwParams | None = None
) -> tuple[np.ndarray, list[WarpingPath]]:
    """Distances and optimal paths from x to each row of a (B, L) array"""
    params = params or DtwParams()
    x = _as_sequence(x, "x")
    many = np.asarray(many, dtype=float)
    _check_band(len(x), many.shape[1], params)
    acc = _accumulate(x, many, params)
    distances = _finish(acc[len(x), many.shape[1]], params.q)
    return distances, [_backtrack(acc[:, :, b]) for b in range(many.shape[0])]


def path_cost(
    x: Sequence[float], y: Sequence[float], path: WarpingPath, q: float = 2.0
) -> float:
    """Evaluate the DTW objective along a given path"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    total = sum(abs(x[i] - y[j]) ** q for i, j in path)
    return float(total ** (1.0 / q))


def dtw_matrix(
    set_a: Sequence[Sequence[float]],
    set_b: Sequence[Sequence[float]],
    params: DtwParams | None = None,
    workers: int = 1,
) -> np.ndarray:
    """
    Pairwise DTW distances; entry (i, j) equals dtw_distance(a_i, b_j)

    Rows may be computed on several threads; assembly is by row index so
    the result does not depend on ``workers``.
    """
    params = params or DtwParams()
    rows_a = []
    for i, a in enumerate(set_a):
        try:
            rows_a.append(_as_sequence(a, f"a[{i}]"))
        except DtwError as e:
            raise DtwError(f"{e} (pair row {i})") from e
    groups: dict[int, list[int]] = {}
    rows_b = []
    for j, b in enumerate(set_b):
        try:
            rows_b.append(_as_sequence(b, f"b[{j}]"))
        except DtwError as e:
            raise DtwError(f"{e} (pair column {j})") from e
        groups.setdefault(len(rows_b[-1]), []).append(j)
    stacks = {
        length: (np.array(idx), np.stack([rows_b[j] for j in idx]))
        for length, idx in groups.items()
    }
    for i, a in enumerate(rows_a):
        for length, (idx, _) in stacks.items():
            _check_band(len(a), length, params, f" at pair ({i}, {idx[0]})")

    def compute_row(i: int) -> np.ndarray:
        row = np.empty(len(rows_b))
        for idx, stack in stacks.values():
            row[idx] = dtw_to_many(rows_a[i], stack, params)
        return row

    if workers > 1 and len(rows_a) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(compute_row, range(len(rows_a))))
    else:
        rows = [compute_row(i) for i in range(len(rows_a))]
    return np.array(rows).reshape(len(rows_a), len(rows_b))
