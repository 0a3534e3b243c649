"""Monthly multichannel series: ingestion, scaling, lag embedding, splitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

MIN_PIPELINE_LENGTH = 24


class SeriesError(ValueError):
    """Raised when a series violates an ingestion or shape contract."""


@dataclass(frozen=True)
class MultichannelSeries:
    """A T x m block of aligned monthly observations.

    ``values[t, j]`` is channel ``j`` at month ``start_period + t``.
    """

    values: np.ndarray
    channel_names: tuple[str, ...]
    start_period: pd.Period = field(default_factory=lambda: pd.Period("2000-01", freq="M"))

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise SeriesError(f"values must be 2-D, got shape {values.shape}")
        names = tuple(str(n) for n in self.channel_names)
        if len(names) != values.shape[1]:
            raise SeriesError(
                f"{len(names)} channel names for {values.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise SeriesError(f"duplicate channel names: {names}")
        if not np.all(np.isfinite(values)):
            raise SeriesError("values contain missing or non-finite cells")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "start_period", pd.Period(self.start_period, freq="M"))

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def dates(self) -> pd.PeriodIndex:
        return pd.period_range(self.start_period, periods=self.length, freq="M")

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.channel_names.index(name)]
        except ValueError:
            raise KeyError(f"unknown channel {name!r}") from None

    def select(self, names) -> "MultichannelSeries":
        cols = [self.channel_names.index(n) for n in names]
        return MultichannelSeries(self.values[:, cols], tuple(names), self.start_period)

    def head(self, n: int) -> "MultichannelSeries":
        return MultichannelSeries(self.values[:n], self.channel_names, self.start_period)

    def tail_from(self, n: int) -> "MultichannelSeries":
        return MultichannelSeries(
            self.values[n:], self.channel_names, self.start_period + n
        )


@dataclass(frozen=True)
class NormalizationParams:
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.minimum, dtype=float))
        hi = np.atleast_1d(np.asarray(self.maximum, dtype=float))
        if lo.shape != hi.shape:
            raise SeriesError("min/max shape mismatch")
        if np.any(hi <= lo):
            raise SeriesError("normalization requires max > min for every channel")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.minimum) / (self.maximum - self.minimum)

    def invert(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * (self.maximum - self.minimum) + self.minimum


@dataclass(frozen=True)
class SupervisedSet:
    """Lagged inputs and ``horizon``-step-ahead targets of one channel.

    ``target_index[i]`` is the position in the source series of ``targets[i]``.
    """

    inputs: np.ndarray
    targets: np.ndarray
    horizon: int
    lag_count: int
    target_index: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.inputs.shape[0]

    def subset(self, mask) -> "SupervisedSet":
        return SupervisedSet(
            self.inputs[mask], self.targets[mask], self.horizon, self.lag_count,
            self.target_index[mask],
        )


def ingest_csv(path, min_rows: int = MIN_PIPELINE_LENGTH) -> MultichannelSeries:
    """Read a ``date,<channel>...`` CSV of consecutive months.

    Interior missing cells are repaired by linear interpolation; missing cells
    at either end of a channel are rejected, as are gaps in the month index.
    """
    path = Path(path)
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    if frame.shape[1] < 2:
        raise SeriesError(f"{path}: need a date column and at least one channel")
    date_col = frame.columns[0]
    try:
        periods = pd.PeriodIndex(
            [pd.Period(pd.to_datetime(s.strip(), format="%Y-%m"), freq="M") for s in frame[date_col]],
            freq="M",
        )
    except (ValueError, TypeError) as exc:
        raise SeriesError(f"{path}: unparseable date ({exc})") from None
    if len(periods) > 1:
        steps = np.diff(periods.asi8)
        if np.any(steps != 1):
            bad = int(np.flatnonzero(steps != 1)[0])
            raise SeriesError(
                f"{path}: non-consecutive index between {periods[bad]} and {periods[bad + 1]}"
            )
    if len(periods) < min_rows:
        raise SeriesError(f"{path}: {len(periods)} rows, need at least {min_rows}")

    channels = frame.columns[1:]
    cols = []
    for name in channels:
        raw = frame[name].str.strip().replace("", np.nan)
        try:
            # astype(float) parses exactly; pd.to_numeric can be off by an ulp
            vals = raw.astype(float).to_numpy()
        except ValueError:
            numeric = pd.to_numeric(raw, errors="coerce")
            row = int(np.flatnonzero((raw.notna() & numeric.isna()).to_numpy())[0])
            raise SeriesError(f"{path}: non-numeric cell {raw.iloc[row]!r} in {name!r}") from None
        missing = np.isnan(vals)
        if missing.all():
            raise SeriesError(f"{path}: channel {name!r} is empty")
        if missing[0] or missing[-1]:
            raise SeriesError(f"{path}: missing boundary value in channel {name!r}")
        if missing.any():
            idx = np.arange(len(vals))
            vals[missing] = np.interp(idx[missing], idx[~missing], vals[~missing])
        cols.append(vals)
    return MultichannelSeries(np.column_stack(cols), tuple(channels), periods[0])


def write_csv(series: MultichannelSeries, path) -> None:
    frame = pd.DataFrame(series.values, columns=list(series.channel_names))
    frame.insert(0, "date", series.dates.strftime("%Y-%m"))
    frame.to_csv(path, index=False, float_format="%.17g")


def min_max_normalize(series: MultichannelSeries) -> tuple[MultichannelSeries, NormalizationParams]:
    """Map every channel onto [0, 1]."""
    lo = series.values.min(axis=0)
    hi = series.values.max(axis=0)
    flat = [n for n, a, b in zip(series.channel_names, lo, hi) if not b > a]
    if flat:
        raise SeriesError(f"constant channel(s) cannot be normalized: {', '.join(flat)}")
    params = NormalizationParams(lo, hi)
    scaled = MultichannelSeries(params.apply(series.values), series.channel_names, series.start_period)
    return scaled, params


def denormalize(series: MultichannelSeries, params: NormalizationParams) -> MultichannelSeries:
    return MultichannelSeries(params.invert(series.values), series.channel_names, series.start_period)


def make_lag_matrix(values, lag_count: int, horizon: int) -> SupervisedSet:
    """Direct-strategy embedding: row k is ``y[k:k+p]``, target ``y[k+p-1+h]``."""
    y = np.asarray(values, dtype=float)
    if y.ndim != 1:
        raise SeriesError("make_lag_matrix takes a single channel")
    if lag_count < 1 or horizon < 1:
        raise SeriesError("lag_count and horizon must be >= 1")
    n_rows = y.size - lag_count - horizon + 1
    if n_rows < 1:
        raise SeriesError(
            f"series of length {y.size} too short for {lag_count} lags at horizon {horizon}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(y, lag_count)[:n_rows].copy()
    target_index = np.arange(n_rows) + lag_count - 1 + horizon
    return SupervisedSet(windows, y[target_index].copy(), horizon, lag_count, target_index)


def chronological_split(series, train_fraction: float):
    """Split without shuffling; the training part gets ``floor(T * fraction)`` rows.

    Works on a :class:`MultichannelSeries` or on any array indexed by time.
    """
    if not 0.0 < train_fraction < 1.0:
        raise SeriesError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = series.length if isinstance(series, MultichannelSeries) else len(series)
    n_train = int(np.floor(n * train_fraction))
    if isinstance(series, MultichannelSeries):
        return series.head(n_train), series.tail_from(n_train)
    return series[:n_train], series[n_train:]
