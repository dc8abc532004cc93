"""
Deterministic synthetic cell-traffic generator

Each cell follows one latent daily profile at a time (switching at configured
weeks), scaled on weekends and during an optional demand dip, with Gaussian
noise on top. Auxiliary RAN channels are affine or lagged copies of the
volume plus independent noise channels, so channel selection has real work.
"""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..clustering.dtw import DtwParams, dtw_matrix
from ..config import HANDOVER_INCOMING, HANDOVER_OUTGOING, OUTPUT_CHANNEL
from ..errors import SeriesError
from ..timeseries.core import TimeSeries

logger = logging.getLogger(__name__)

HOURS = np.arange(24)
START_TIME = pd.Timestamp("2024-01-01 00:00")  # a Monday


def _bump(center: float, width: float) -> np.ndarray:
    """Gaussian bump over the hours of a day, wrapping at midnight"""
    distance = np.minimum(np.abs(HOURS - center), 24 - np.abs(HOURS - center))
    return np.exp(-0.5 * (distance / width) ** 2)


@dataclass(frozen=True)
class SyntheticProfile:
    """A named daily shape"""

    name: str
    shape: tuple[float, ...]

    def __post_init__(self):
        shape = tuple(float(v) for v in self.shape)
        if len(shape) != 24:
            raise SeriesError(f"Profile '{self.name}' must have 24 values, got {len(shape)}")
        if min(shape) < 0 or max(shape) > 1:
            raise SeriesError(f"Profile '{self.name}' values must lie in [0, 1]")
        object.__setattr__(self, "shape", shape)

    @property
    def values(self) -> np.ndarray:
        return np.array(self.shape)


def _profile(name: str, values: np.ndarray) -> SyntheticProfile:
    return SyntheticProfile(name, tuple(np.round(np.clip(values, 0, 1), 6)))


COMMUTER_BIMODAL = _profile(
    "commuter_bimodal", 0.15 + 0.75 * np.maximum(_bump(8, 1.5), _bump(18, 1.5))
)
FLAT_NOCTURNAL = _profile("flat_nocturnal", np.where((HOURS >= 22) | (HOURS <= 5), 0.85, 0.2))
EVENING_PEAK = _profile("evening_peak", 0.1 + 0.85 * _bump(20, 2.0))
WEEKEND_HEAVY = _profile(
    "weekend_heavy", np.select([HOURS < 7, HOURS < 15], [0.1, 0.9], default=0.5)
)
# Never part of the default set; streamed to exercise the OOD loop
MIDDAY_SPIKE = _profile("midday_spike", 0.05 + 0.95 * _bump(12.5, 1.0))

DEFAULT_PROFILES = (COMMUTER_BIMODAL, FLAT_NOCTURNAL, EVENING_PEAK, WEEKEND_HEAVY)
PROFILES = {p.name: p for p in (*DEFAULT_PROFILES, MIDDAY_SPIKE)}

CORRELATED_CHANNELS = {
    # name: (gain, offset, noise as a fraction of gain)
    "prb_util": (0.8, 0.05, 0.02),
    "active_users": (60.0, 5.0, 0.02),
    "ul_volume": (0.3, 0.01, 0.03),
    "rrc_conn": (25.0, 2.0, 0.02),
}
NOISE_CHANNEL_COUNT = 14


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator parameters; defaults give the desk-scale dataset"""

    profiles: tuple[SyntheticProfile, ...] = DEFAULT_PROFILES
    cells: int = 20
    weeks: int = 12
    noise_sigma: float = 0.05
    regime_switches: Mapping[int, Sequence[tuple[int, int]]] = field(default_factory=dict)
    weekend_scale: float = 1.0
    dip: tuple[int, int, float] | None = None
    amplitude_range: tuple[float, float] = (1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if not self.profiles:
            raise SeriesError("At least one profile is required")
        if self.cells < 1 or self.weeks < 1:
            raise SeriesError(f"cells and weeks must be >= 1 (got {self.cells}, {self.weeks})")
        if self.noise_sigma < 0:
            raise SeriesError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not self.weekend_scale > 0:
            raise SeriesError(f"weekend_scale must be positive, got {self.weekend_scale}")
        lo, hi = self.amplitude_range
        if not 0 < lo <= hi:
            raise SeriesError(f"Invalid amplitude range {self.amplitude_range}")
        if self.dip is not None:
            start, end, scale = self.dip
            if not (0 <= start < end and scale > 0):
                raise SeriesError(f"Invalid dip {self.dip}")
        for cell, switches in self.regime_switches.items():
            if not 0 <= cell < self.cells:
                raise SeriesError(f"Regime switch for unknown cell index {cell}")
            for week, profile in switches:
                if not (0 <= week < self.weeks and 0 <= profile < len(self.profiles)):
                    raise SeriesError(f"Invalid regime switch ({week}, {profile}) for cell {cell}")

    @property
    def days(self) -> int:
        return 7 * self.weeks

    def cell_id(self, index: int) -> str:
        return f"cell_{index:03d}"


@dataclass
class SyntheticDataset:
    """Generated series plus the generating profile of every cell-day"""

    series: list[TimeSeries]
    labels: dict[str, np.ndarray]
    profile_names: tuple[str, ...]

    def labels_frame(self) -> pd.DataFrame:
        rows = [
            (cell, day, self.profile_names[label])
            for cell, cell_labels in self.labels.items()
            for day, label in enumerate(cell_labels)
        ]
        return pd.DataFrame(rows, columns=["cell_id", "day_index", "profile"])


def day_labels(spec: SyntheticSpec, cell: int) -> np.ndarray:
    """Profile index per day: cell i starts on profile i mod P, then switches"""
    labels = np.full(spec.days, cell % len(spec.profiles), dtype=int)
    for week, profile in sorted(spec.regime_switches.get(cell, ())):
        labels[7 * week :] = profile
    return labels


def _generate_cell(
    spec: SyntheticSpec, cell: int, rng: np.random.Generator
) -> tuple[TimeSeries, np.ndarray]:
    labels = day_labels(spec, cell)
    shapes = np.stack([p.values for p in spec.profiles])

    start = START_TIME
    timestamps = pd.date_range(start, periods=24 * spec.days, freq="h")
    day = np.arange(24 * spec.days) // 24
    hour = np.tile(HOURS, spec.days)
    scale = np.ones(spec.days)
    weekend = pd.date_range(start, periods=spec.days, freq="D").dayofweek >= 5
    scale[weekend] *= spec.weekend_scale
    if spec.dip is not None:
        dip_start, dip_end, dip_scale = spec.dip
        scale[7 * dip_start : 7 * dip_end] *= dip_scale

    amplitude = rng.uniform(*spec.amplitude_range)
    clean = shapes[labels[day], hour] * scale[day]
    volume = amplitude * np.maximum(clean + rng.normal(0.0, spec.noise_sigma, len(day)), 0.0)

    channels = {OUTPUT_CHANNEL: volume}
    for name, (gain, offset, noise) in CORRELATED_CHANNELS.items():
        channels[name] = gain * volume + offset + rng.normal(0.0, noise * gain, len(day))
    lagged = np.concatenate([volume[:1], volume[:-1]])
    channels[HANDOVER_INCOMING] = 40.0 * lagged + rng.normal(0.0, 6.0, len(day))
    channels[HANDOVER_OUTGOING] = 35.0 * lagged + rng.normal(0.0, 6.0, len(day))
    for index in range(NOISE_CHANNEL_COUNT):
        channels[f"noise_{index:02d}"] = rng.normal(1.0, 0.2, len(day))

    series = TimeSeries(spec.cell_id(cell), timestamps[0], channels, OUTPUT_CHANNEL)
    return series, labels


def generate(spec: SyntheticSpec) -> SyntheticDataset:
    """
    Generate every cell of a spec

    Each cell draws from its own child of ``SeedSequence(spec.seed)``, so a
    cell's data does not depend on how many cells are generated after it.
    """
    children = np.random.SeedSequence(spec.seed).spawn(spec.cells)
    series = []
    labels = {}
    for cell, child in enumerate(children):
        cell_series, cell_labels = _generate_cell(spec, cell, np.random.default_rng(child))
        series.append(cell_series)
        labels[cell_series.cell_id] = cell_labels
    logger.info(
        f"Generated {spec.cells} cells x {spec.weeks} weeks over "
        f"{len(spec.profiles)} profiles (sigma={spec.noise_sigma}, seed={spec.seed})"
    )
    return SyntheticDataset(series, labels, tuple(p.name for p in spec.profiles))


def holdout_split(
    dataset: Sequence[TimeSeries], holdout_cell: str
) -> tuple[list[TimeSeries], TimeSeries]:
    """
    Separate one cell from the rest

    Raises:
        SeriesError: Unknown cell id
    """
    held = [s for s in dataset if s.cell_id == holdout_cell]
    if not held:
        raise SeriesError(f"Unknown holdout cell '{holdout_cell}'")
    if len(held) > 1:
        logger.warning(f"Cell {holdout_cell} has {len(held)} parts; holding out the longest")
    train = [s for s in dataset if s.cell_id != holdout_cell]
    return train, max(held, key=len)


@dataclass
class SeparationReport:
    """How far apart the profiles are relative to the noise"""

    min_distance: float
    noise_sigma: float
    ratio: float
    distances: np.ndarray


def separation_report(spec: SyntheticSpec, params: DtwParams | None = None) -> SeparationReport:
    """Minimum inter-profile DTW distance and its ratio to the noise sigma"""
    shapes = [p.values for p in spec.profiles]
    distances = dtw_matrix(shapes, shapes, params)
    if len(shapes) > 1:
        off_diagonal = distances[~np.eye(len(shapes), dtype=bool)]
        minimum = float(off_diagonal.min())
    else:
        minimum = float("inf")
    ratio = minimum / spec.noise_sigma if spec.noise_sigma > 0 else float("inf")
    return SeparationReport(minimum, spec.noise_sigma, ratio, distances)


def write_dataset_csv(series: Sequence[TimeSeries], path: str | Path) -> Path:
    """Write series in the long CSV layout read by ``ingest_csv``"""
    frames = []
    for s in series:
        frame = pd.DataFrame(dict(s.features))
        frame.insert(0, "timestamp", s.timestamps.strftime("%Y-%m-%dT%H:%M:%S"))
        frame.insert(0, "cell_id", s.cell_id)
        frames.append(frame)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.concat(frames, ignore_index=True).to_csv(
        path, index=False, float_format="%.6f", lineterminator="\n"
    )
    return path


def write_labels_csv(dataset: SyntheticDataset, path: str | Path) -> Path:
    """Write the (cell_id, day_index, profile) ground truth"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset.labels_frame().to_csv(path, index=False, lineterminator="\n")
    return path
