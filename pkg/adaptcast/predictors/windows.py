"""
Sliding input/target windows for supervised training
"""

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from ..errors import PredictorError
from ..timeseries.core import TimeSeries
from ..timeseries.features import FeatureConfig


@dataclass(frozen=True, eq=False)
class WindowSet:
    """
    Stacked windows with the provenance of each target

    ``inputs`` has shape (W, n, f), ``targets`` shape (W,). Window w covers
    steps [start, start + n) of its source series and targets step
    ``target_index[w] = start + n + m - 1``.
    """

    inputs: np.ndarray
    targets: np.ndarray
    cell_ids: tuple[str, ...]
    parts: np.ndarray
    target_index: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def provenance(self) -> list[tuple[str, int, int]]:
        return [
            (cell, int(part), int(t))
            for cell, part, t in zip(self.cell_ids, self.parts, self.target_index, strict=True)
        ]

    @property
    def cells(self) -> set[str]:
        return set(self.cell_ids)

    def subset(self, index: np.ndarray) -> "WindowSet":
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        return WindowSet(
            self.inputs[index],
            self.targets[index],
            tuple(self.cell_ids[i] for i in index),
            self.parts[index],
            self.target_index[index],
        )

    @classmethod
    def empty(cls, n: int, f: int) -> "WindowSet":
        return cls(
            np.empty((0, n, f)), np.empty(0), (), np.empty(0, dtype=int), np.empty(0, dtype=int)
        )

    @classmethod
    def concat(cls, sets: Iterable["WindowSet"]) -> "WindowSet":
        sets = list(sets)
        if not sets:
            raise PredictorError("Cannot concatenate an empty list of window sets")
        return cls(
            np.concatenate([s.inputs for s in sets]),
            np.concatenate([s.targets for s in sets]),
            tuple(c for s in sets for c in s.cell_ids),
            np.concatenate([s.parts for s in sets]),
            np.concatenate([s.target_index for s in sets]),
        )


def make_windows(series: TimeSeries, config: FeatureConfig, n: int, m: int = 1) -> WindowSet:
    """
    Stride-1 windows of n past steps over the configured channels

    The target of the window starting at s is the output channel at
    s + n + m - 1; a series of length L yields L - n - m + 1 windows
    (none when it is too short).
    """
    if n < 1 or m < 1:
        raise PredictorError(f"Window n and horizon m must be >= 1, got n={n}, m={m}")
    f = config.feature_count
    count = len(series) - n - m + 1
    if count <= 0:
        return WindowSet.empty(n, f)

    data = series.matrix(config.selected_channels)
    starts = np.arange(count)
    inputs = data[starts[:, None] + np.arange(n)[None, :]]
    target_index = starts + n + m - 1
    targets = series.channel(config.output_channel)[target_index]
    return WindowSet(
        inputs=inputs,
        targets=np.array(targets, dtype=float),
        cell_ids=(series.cell_id,) * count,
        parts=np.full(count, series.part, dtype=int),
        target_index=target_index,
    )


def split_windows(
    windows: WindowSet, validation_fraction: float, seed: int = 0
) -> tuple[WindowSet, WindowSet]:
    """Seeded random train/validation split with at least one window on each side"""
    if len(windows) < 2:
        raise PredictorError(f"Need at least 2 windows to split, got {len(windows)}")
    order = np.random.default_rng(seed).permutation(len(windows))
    n_val = min(max(1, int(round(validation_fraction * len(windows)))), len(windows) - 1)
    return windows.subset(np.sort(order[n_val:])), windows.subset(np.sort(order[:n_val]))
