"""
Core time-series types: ingestion, normalization and seasonal segmentation
"""

import json
import logging
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any

import numpy as np
import pandas as pd

from ..config import BINARY_CHANNELS, OUTPUT_CHANNEL
from ..errors import IngestError, SeriesError

logger = logging.getLogger(__name__)

HOUR = pd.Timedelta(hours=1)


def frozen_array(values: Any) -> np.ndarray:
    """Copy values into a read-only float array"""
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SeasonalityConfig:
    """Seasonal period n and forecast horizon m, both in hourly steps"""

    n: int = 24
    m: int = 1
    align_midnight: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise SeriesError(f"Seasonal period n must be >= 2, got {self.n}")
        if self.m < 1:
            raise SeriesError(f"Forecast horizon m must be >= 1, got {self.m}")


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Hourly multivariate record of one cell"""

    cell_id: str
    start_time: pd.Timestamp
    features: Mapping[str, np.ndarray]
    output_channel: str = OUTPUT_CHANNEL
    part: int = 0

    def __post_init__(self):
        start = pd.Timestamp(self.start_time)
        if start.tzinfo is not None:
            start = start.tz_convert(None)
        if start != start.floor("h"):
            raise SeriesError(f"Series {self.cell_id} does not start on the hour")
        object.__setattr__(self, "start_time", start)

        channels = {name: frozen_array(values) for name, values in self.features.items()}
        if self.output_channel not in channels:
            raise SeriesError(
                f"Output channel '{self.output_channel}' absent from series {self.cell_id}"
            )
        lengths = {len(values) for values in channels.values()}
        if len(lengths) != 1:
            raise SeriesError(f"Channels of series {self.cell_id} differ in length")
        if lengths.pop() == 0:
            raise SeriesError(f"Series {self.cell_id} is empty")
        for name, values in channels.items():
            if values.ndim != 1 or not np.all(np.isfinite(values)):
                raise SeriesError(
                    f"Channel '{name}' of series {self.cell_id} has missing values"
                )
        object.__setattr__(self, "features", MappingProxyType(channels))

    def __len__(self) -> int:
        return len(self.features[self.output_channel])

    @property
    def channels(self) -> tuple[str, ...]:
        return tuple(self.features)

    @property
    def output(self) -> np.ndarray:
        return self.features[self.output_channel]

    @property
    def timestamps(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start_time, periods=len(self), freq="h")

    @property
    def hour_index(self) -> int:
        """Absolute hour index of the first sample (hours since the Unix epoch)"""
        return int((self.start_time - pd.Timestamp(0)) // HOUR)

    def channel(self, name: str) -> np.ndarray:
        if name not in self.features:
            raise SeriesError(f"Channel '{name}' absent from series {self.cell_id}")
        return self.features[name]

    def matrix(self, channels: Sequence[str]) -> np.ndarray:
        """Stack the named channels into an (L, f) matrix"""
        return np.column_stack([self.channel(name) for name in channels])

    def with_channels(self, new_channels: Mapping[str, Any]) -> "TimeSeries":
        """Copy of this series with channels appended or replaced"""
        merged = dict(self.features)
        merged.update(new_channels)
        return TimeSeries(
            self.cell_id, self.start_time, merged, self.output_channel, self.part
        )

    def slice(self, start: int, stop: int | None = None) -> "TimeSeries":
        """Hourly sub-range [start, stop) as a new series"""
        stop = len(self) if stop is None else stop
        return TimeSeries(
            self.cell_id,
            self.start_time + start * HOUR,
            {name: values[start:stop] for name, values in self.features.items()},
            self.output_channel,
            self.part,
        )


@dataclass
class IngestResult:
    """Series read from a CSV file plus what preprocessing did to it"""

    series: list[TimeSeries]
    dropped_rows: int = 0
    imputed_rows: int = 0
    split_count: int = 0


def ingest_csv(
    path: str | Path,
    schema: Sequence[str] | None = None,
    *,
    impute: bool = True,
    max_gap: int = 2,
    output_channel: str = OUTPUT_CHANNEL,
) -> IngestResult:
    """
    Read a long-format CSV (cell_id, timestamp, <channel>...) into series

    Args:
        path: CSV file to read
        schema: Channels to keep (default: every non-key column)
        impute: Linearly interpolate gaps of at most ``max_gap`` hours
        max_gap: Longest gap, in missing hours, that is interpolated
        output_channel: Name of the prediction target channel

    Returns:
        IngestResult with one series per cell (more when gaps split a cell)

    Raises:
        IngestError: Malformed rows, duplicate keys or non-hourly timestamps
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise IngestError(f"Input file not found: {path}") from e
    except pd.errors.ParserError as e:
        raise IngestError(f"Malformed row in {path}: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise IngestError(f"Input file {path} is empty") from e

    columns = [c.strip() for c in frame.columns]
    frame.columns = columns
    for key in ("cell_id", "timestamp"):
        if key not in columns:
            raise IngestError(f"Header of {path} lacks '{key}'")
    channels = list(schema) if schema else [
        c for c in columns if c not in ("cell_id", "timestamp")
    ]
    if not channels:
        raise IngestError(f"Header of {path} names no feature channel")
    missing = [c for c in channels if c not in columns]
    if missing:
        raise IngestError(f"Channels {missing} absent from header of {path}")
    if output_channel not in channels:
        raise IngestError(f"Output channel '{output_channel}' absent from {path}")

    # Data row i sits on file line i + 2 (line 1 is the header)
    lines = frame.index.to_numpy() + 2

    timestamps = pd.to_datetime(
        frame["timestamp"], errors="coerce", utc=True, format="ISO8601"
    ).dt.tz_localize(None)
    bad = timestamps.isna().to_numpy()
    if bad.any():
        raise IngestError(f"Malformed timestamp on line {lines[bad.argmax()]}")
    off_hour = (timestamps != timestamps.dt.floor("h")).to_numpy()
    if off_hour.any():
        raise IngestError(
            f"Non-hourly cadence: timestamp not on the hour on line "
            f"{lines[off_hour.argmax()]}"
        )

    values = pd.DataFrame(index=frame.index)
    empty = np.zeros(len(frame), dtype=bool)
    for channel in channels:
        raw = frame[channel].str.strip()
        parsed = pd.to_numeric(raw, errors="coerce")
        blank = (raw == "").to_numpy()
        malformed = parsed.isna().to_numpy() & ~blank
        if malformed.any():
            raise IngestError(
                f"Malformed value for '{channel}' on line {lines[malformed.argmax()]}"
            )
        empty |= blank
        values[channel] = parsed

    values["cell_id"] = frame["cell_id"].str.strip()
    values["timestamp"] = timestamps
    values["line"] = lines

    duplicated = values.duplicated(["cell_id", "timestamp"]).to_numpy()
    if duplicated.any():
        row = values[duplicated].iloc[0]
        raise IngestError(
            f"Duplicate (cell_id, timestamp) = ({row['cell_id']}, "
            f"{row['timestamp'].isoformat()}) on line {row['line']}"
        )

    dropped = int(empty.sum())
    if dropped:
        logger.warning(f"Dropped {dropped} rows with empty values from {path}")
    values = values[~empty]

    result = IngestResult(series=[], dropped_rows=dropped)
    for cell_id, rows in sorted(values.groupby("cell_id"), key=lambda kv: kv[0]):
        rows = rows.sort_values("timestamp")
        steps = (rows["timestamp"].diff().dropna() / HOUR).to_numpy()
        if len(steps) and np.median(steps) > 1:
            raise IngestError(f"Non-hourly cadence for cell {cell_id} in {path}")
        _build_cell_series(
            str(cell_id), rows, channels, output_channel, impute, max_gap, result
        )

    logger.info(
        f"Ingested {len(result.series)} series from {path} "
        f"({result.dropped_rows} dropped, {result.imputed_rows} imputed rows)"
    )
    return result


def _build_cell_series(
    cell_id: str,
    rows: pd.DataFrame,
    channels: list[str],
    output_channel: str,
    impute: bool,
    max_gap: int,
    result: IngestResult,
) -> None:
    """Split one cell's rows at long gaps and interpolate the short ones"""
    gaps = (rows["timestamp"].diff() / HOUR).fillna(1).to_numpy() - 1
    fillable = max_gap if impute else 0
    breaks = np.flatnonzero(gaps > fillable)
    bounds = [0, *breaks.tolist(), len(rows)]

    for part, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:], strict=True)):
        block = rows.iloc[lo:hi].set_index("timestamp")[channels]
        full_index = pd.date_range(block.index[0], block.index[-1], freq="h")
        imputed = len(full_index) - len(block)
        block = block.reindex(full_index).interpolate(method="linear")
        result.imputed_rows += imputed
        result.series.append(
            TimeSeries(
                cell_id=cell_id,
                start_time=full_index[0],
                features={c: block[c].to_numpy() for c in channels},
                output_channel=output_channel,
                part=part,
            )
        )
    if len(bounds) > 2:
        result.split_count += len(bounds) - 2
        logger.warning(f"Cell {cell_id} split into {len(bounds) - 1} parts at gaps")


@dataclass(frozen=True)
class NormalizationStats:
    """Per-channel min/max used for min-max scaling"""

    ranges: Mapping[str, tuple[float, float]]
    constant_channels: frozenset[str] = frozenset()

    def __post_init__(self):
        ranges = {k: (float(lo), float(hi)) for k, (lo, hi) in self.ranges.items()}
        for channel, (lo, hi) in ranges.items():
            if lo > hi:
                raise SeriesError(f"Invalid stats for '{channel}': min > max")
        object.__setattr__(self, "ranges", MappingProxyType(ranges))
        object.__setattr__(self, "constant_channels", frozenset(self.constant_channels))

    def scale(self, channel: str, values: np.ndarray) -> np.ndarray:
        if channel not in self.ranges:
            raise SeriesError(f"No normalization stats for channel '{channel}'")
        lo, hi = self.ranges[channel]
        values = np.asarray(values, dtype=float)
        if hi == lo:
            return np.zeros_like(values)
        return (values - lo) / (hi - lo)

    def denormalize(self, channel: str, values: Any) -> np.ndarray:
        """Inverse of ``scale``; a constant channel maps back to its value"""
        if channel not in self.ranges:
            raise SeriesError(f"No normalization stats for channel '{channel}'")
        lo, hi = self.ranges[channel]
        return np.asarray(values, dtype=float) * (hi - lo) + lo

    def to_dict(self) -> dict[str, dict[str, float]]:
        return {k: {"min": lo, "max": hi} for k, (lo, hi) in sorted(self.ranges.items())}

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping[str, float]]) -> "NormalizationStats":
        ranges = {k: (v["min"], v["max"]) for k, v in data.items()}
        constant = {k for k, (lo, hi) in ranges.items() if lo == hi}
        return cls(ranges, frozenset(constant))

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def from_json(cls, path: str | Path) -> "NormalizationStats":
        return cls.from_dict(json.loads(Path(path).read_text()))


def normalize(
    series: TimeSeries, stats: NormalizationStats | None = None
) -> tuple[TimeSeries, NormalizationStats]:
    """
    Min-max scale every non-binary channel of a series

    Args:
        series: Series to scale
        stats: Ranges to reuse (e.g. training stats applied to test data);
            computed from this series when omitted

    Returns:
        Scaled series and the stats that reproduce the mapping. Constant
        channels map to all-zeros and are listed in ``constant_channels``.
    """
    ranges: dict[str, tuple[float, float]] = {}
    constant: set[str] = set()
    scaled: dict[str, np.ndarray] = {}

    for name, values in series.features.items():
        if name in BINARY_CHANNELS:
            scaled[name] = values
            continue
        if stats is not None:
            if name not in stats.ranges:
                raise SeriesError(f"No normalization stats for channel '{name}'")
            lo, hi = stats.ranges[name]
        else:
            lo, hi = float(values.min()), float(values.max())
        ranges[name] = (lo, hi)
        if lo == hi:
            constant.add(name)
            if stats is None:
                logger.warning(
                    f"Channel '{name}' of series {series.cell_id} is constant; "
                    "mapped to zeros"
                )
        scaled[name] = NormalizationStats({name: (lo, hi)}).scale(name, values)

    result = NormalizationStats(ranges, frozenset(constant))
    return series.with_channels(scaled), result


def split_train_test(
    series: TimeSeries, train_fraction: float = 0.8
) -> tuple[TimeSeries, TimeSeries]:
    """Chronological split into a training prefix and a test suffix"""
    if not 0 < train_fraction < 1:
        raise SeriesError(f"train_fraction must be in (0, 1), got {train_fraction}")
    cut = int(len(series) * train_fraction)
    if cut == 0 or cut == len(series):
        raise SeriesError(f"Series {series.cell_id} too short to split")
    return series.slice(0, cut), series.slice(cut)


@dataclass(frozen=True, eq=False)
class Segment:
    """One seasonal cycle of a cell's (normalized) output channel"""

    source_cell: str
    day_index: int
    values: np.ndarray
    start: int = 0
    part: int = 0

    def __post_init__(self):
        values = frozen_array(self.values)
        if values.ndim != 1 or len(values) == 0:
            raise SeriesError("Segment values must be a nonempty sequence")
        if not np.all(np.isfinite(values)):
            raise SeriesError(
                f"Segment {self.source_cell}/{self.day_index} has non-finite values"
            )
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def provenance(self) -> tuple[str, int, int]:
        return (self.source_cell, self.part, self.day_index)


@dataclass(frozen=True)
class Segmentation:
    """Result of cutting one series into seasonal segments"""

    segments: tuple[Segment, ...]
    remainder: int
    offset: int = 0

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __getitem__(self, index: int) -> Segment:
        return self.segments[index]


def segmentize(series: TimeSeries, config: SeasonalityConfig) -> Segmentation:
    """
    Cut the output channel into consecutive non-overlapping windows of length n

    Segments start at the series start, or at the first midnight when
    ``config.align_midnight`` is set. The trailing remainder shorter than n
    is discarded and reported.
    """
    n = config.n
    offset = (-series.start_time.hour) % 24 if config.align_midnight else 0
    usable = max(len(series) - offset, 0)
    count = usable // n

    if count == 0:
        logger.warning(
            f"Series {series.cell_id} has {usable} usable steps, fewer than n={n}; "
            "no segments produced"
        )
        return Segmentation((), usable, offset)

    output = series.output
    segments = tuple(
        Segment(
            source_cell=series.cell_id,
            day_index=i,
            values=output[offset + i * n : offset + (i + 1) * n],
            start=offset + i * n,
            part=series.part,
        )
        for i in range(count)
    )
    remainder = usable - count * n
    if remainder:
        logger.debug(f"Series {series.cell_id}: discarded trailing {remainder} steps")
    return Segmentation(segments, remainder, offset)


@dataclass(frozen=True, eq=False)
class SegmentSet:
    """Flat collection of equal-length segments with provenance"""

    segments: tuple[Segment, ...] = ()
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        segments = tuple(self.segments)
        lengths = {s.n for s in segments}
        if len(lengths) > 1:
            expected = segments[0].n
            odd = next(s for s in segments if s.n != expected)
            raise SeriesError(
                f"Mixed segment lengths: segment {odd.source_cell}/{odd.day_index} "
                f"has length {odd.n}, expected {expected}"
            )
        object.__setattr__(self, "segments", segments)
        matrix = (
            np.stack([s.values for s in segments])
            if segments
            else np.empty((0, 0), dtype=float)
        )
        matrix.setflags(write=False)
        object.__setattr__(self, "values", matrix)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __getitem__(self, index: int) -> Segment:
        return self.segments[index]

    @property
    def n(self) -> int | None:
        return self.segments[0].n if self.segments else None

    @property
    def provenance(self) -> list[tuple[str, int, int]]:
        return [s.provenance for s in self.segments]

    @property
    def cells(self) -> set[str]:
        return {s.source_cell for s in self.segments}

    def union(self, other: "SegmentSet") -> "SegmentSet":
        return consolidate([self.segments, other.segments])

    @classmethod
    def from_values(
        cls, rows: Iterable[Sequence[float]], source: str = "buffer"
    ) -> "SegmentSet":
        """Wrap raw value rows (e.g. buffered stream windows) as segments"""
        return cls(
            tuple(Segment(source, i, row) for i, row in enumerate(rows))
        )


def consolidate(per_cell_segments: Iterable[Iterable[Segment]]) -> SegmentSet:
    """Concatenate per-cell segment lists into one SegmentSet"""
    flat: list[Segment] = []
    for segments in per_cell_segments:
        flat.extend(segments)
    return SegmentSet(tuple(flat))
